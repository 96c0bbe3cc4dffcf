//! Approximating a λ-preserving map with non-dyadic data by elements of `G`,
//! then by a LEO element.

use dyadic_maps::prelude::*;

fn main() -> Result<()> {
    // Turning value 1/3 and breakpoints on thirds: λ-preserving, not in G.
    let h = PAMap::from_fracs(&[(0, 1, 0, 1), (1, 30, 1, 3), (1, 15, 0, 1), (1, 6, 1, 3), (1, 2, 1, 1), (5, 6, 1, 3), (1, 1, 0, 1)]);
    println!("h λ-preserving: {}, in G: {}", is_lambda_preserving(&h)?, is_in_g(&h));

    for eps in [q(1, 8), q(1, 32)] {
        let g = approximate_in_g(&h, &eps)?;
        println!(
            "ε = {}: {} segments, in G {}, distance {}",
            fmt_q(&eps),
            g.num_segments(),
            is_in_g(&g),
            fmt_q(&sup_distance(&h, &g))
        );
    }

    let id = PAMap::identity();
    let eps = q(1, 4);
    let l = make_leo(&id, &eps)?;
    println!("LEO near the identity: {} segments, LEO {}, distance {}", l.num_segments(), is_leo(&l)?, fmt_q(&sup_distance(&id, &l)));

    let fa = PAMap::f_a();
    let f = approximate_increasing_in_f(&fa, &q(1, 16))?;
    println!("F approximation of f_A is f_A itself: {}", f == fa);
    Ok(())
}
