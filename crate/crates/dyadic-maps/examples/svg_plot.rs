//! Writes `tent.svg` with the diagonal and the first three iterates.

use dyadic_maps::prelude::*;

fn main() -> Result<()> {
    let opts = PlotOptions { diagonal: true, iterate: 3, ..Default::default() };
    let svg = render_svg(&PAMap::tent(), &opts)?;
    let path = std::env::temp_dir().join("tent.svg");
    std::fs::write(&path, &svg).expect("write svg");
    println!("wrote {} ({} bytes)", path.display(), svg.len());
    Ok(())
}
