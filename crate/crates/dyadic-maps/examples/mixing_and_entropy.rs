//! Mixing tests through J-collections, and exact entropy.

use dyadic_maps::prelude::*;

fn main() -> Result<()> {
    // Inverted tent on the left half, upright tent on the right half.
    let block = PAMap::from_fracs(&[(0, 1, 1, 2), (1, 4, 0, 1), (1, 2, 1, 2), (3, 4, 1, 1), (1, 1, 1, 2)]);
    for (name, g) in [("tent", PAMap::tent()), ("block", block), ("w̄3", basic_w3())] {
        let j = j_collection(&g)?;
        let members: Vec<String> = j.intervals.iter().map(|i| i.to_string()).collect();
        println!(
            "{name:>5}: TM {} LEO {} J = {{{}}} ({:?}), entropy {}",
            is_tm(&g)?,
            is_leo(&g)?,
            members.join(", "),
            j.mode,
            entropy(&g)?
        );
    }
    for m in [1, 2, 3, 4, 8] {
        println!("c_min({m}) = {} with exponents {:?}", fmt_q(&c_min(m)?), min_entropy_exponents(m));
    }
    Ok(())
}
