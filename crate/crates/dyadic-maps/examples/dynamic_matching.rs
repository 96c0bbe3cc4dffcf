//! Piecewise-constant schedules moving rates `α` onto targets `β`.

use dyadic_maps::prelude::*;

fn main() -> Result<()> {
    let alpha = [q(1, 2), q(1, 4), q(1, 8), q(1, 8)];
    let beta = vec![q(1, 4); 4];
    let s = solve_dynamic_matching(&alpha, &beta)?;
    print!("schedule (duration, pump per bucket):\n{s}");
    let delivered: Vec<String> = s.delivered(&alpha).iter().map(fmt_q).collect();
    println!("delivered: {}", delivered.join(" "));

    match solve_dynamic_matching(&[q(1, 2), q(1, 2)], &[q(3, 4), q(1, 4)]) {
        Err(Error::Infeasible { index }) => println!("second instance infeasible at prefix {index}"),
        other => println!("unexpected: {other:?}"),
    }

    let groups = kl_grouping(&[1, 2, 2], &[2, 2, 2, 3, 3]);
    println!("k/l grouping: {groups:?}");
    Ok(())
}
