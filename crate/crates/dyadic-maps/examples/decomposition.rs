//! Writing an element of `G` as basic maps and elements of `F`.

use dyadic_maps::prelude::*;

fn main() -> Result<()> {
    let g = random_g(7, 4)?;
    println!("g ({} segments):\n{}", g.num_segments(), g.to_pamap_string());

    let word = decompose(&g)?;
    let names: Vec<&str> = word.factors.iter().map(Factor::name).collect();
    println!("{} factors: {}", word.len(), names.join(" ∘ "));
    println!("recomposes exactly: {}", word.compose() == g);

    let text = word.to_text();
    let back = DecompositionWord::parse(&text)?;
    println!("text form round-trips: {}", back == word);

    let w2q = w2_right_quarter();
    let small = decompose(&compose(&w2q, &PAMap::tent()))?;
    println!("w2,[3/4,1]∘tent:\n{}", small.expand_f()?.to_text());
    Ok(())
}
