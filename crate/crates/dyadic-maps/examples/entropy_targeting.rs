//! Hitting a prescribed entropy with a LEO Markov map in `G`.

use dyadic_maps::prelude::*;

fn main() -> Result<()> {
    let t = PAMap::tent();
    for (c, eps) in [(qi(2), q(1, 4)), (qi(3), q(1, 8)), (q(5, 2), q(1, 16))] {
        let g = target_entropy(&t, &c, &eps)?;
        let e = entropy(&g)?;
        println!(
            "target {} ± {}: entropy {e}, {} segments, LEO {}, distance {}",
            fmt_q(&c),
            fmt_q(&eps),
            g.num_segments(),
            is_leo(&g)?,
            fmt_q(&sup_distance(&t, &g))
        );
    }

    // The minimum-entropy slope rewrite on a 4-leg window over the whole square.
    let w4 = make_window(&WindowSpec::new(Interval::unit(), vec![2, 2, 2, 2], true))?;
    let r = rewrite_slopes_min_entropy(&w4, &Interval::unit(), &q(1, 8))?;
    println!("4 legs: entropy {} -> {}, c_min(4) = {}", entropy(&w4)?, entropy(&r)?, fmt_q(&c_min(4)?));
    Ok(())
}
