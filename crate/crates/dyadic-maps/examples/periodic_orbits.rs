//! Orbits of dyadic points and the period structure of a one-parameter family.

use dyadic_maps::prelude::*;

fn main() -> Result<()> {
    let t = PAMap::tent();
    let o = orbit(&t, &q(3, 16))?;
    println!("tent orbit of 3/16: {:?} (preperiod {}, period {})",
        o.orbit.iter().map(fmt_q).collect::<Vec<_>>(), o.preperiod, o.period);

    for k in [3, 5] {
        let delta = pow2(-k);
        let g = PAMap::period_family(&delta)?;
        let rep = periodic_points(&g, 7, DEFAULT_SEGMENT_BUDGET)?;
        let present: Vec<String> = [3, 5, 7]
            .iter()
            .map(|n| format!("{n}: {}", if rep.by_period[n].is_empty() { "none" } else { "present" }))
            .collect();
        println!("δ = {}: {}", fmt_q(&delta), present.join("; "));
        println!("  Markov partition has {} points", markov_partition(&g)?.len());
    }

    let t2 = iterate(&t, 2, DEFAULT_SEGMENT_BUDGET)?;
    if let Some(c) = has_period3_certificate(&t2) {
        println!("tent² period-3 witness: {} and {} both cover {}", c.i1, c.i2, c.i0);
    }
    Ok(())
}
