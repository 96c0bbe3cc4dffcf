//! Building, parsing and composing maps; membership in `F` and `G`.

use dyadic_maps::prelude::*;

fn main() -> Result<()> {
    let text = "pamap/1\n0 0\n1/2 1\n3/4 0\n1 1\n";
    let w = parse_pamap(text)?;
    let t = PAMap::tent();

    println!("w has {} segments, slopes {:?}", w.num_segments(), w.slopes().iter().map(fmt_q).collect::<Vec<_>>());
    println!("w in G: {}, λ-preserving: {}", is_in_g(&w), is_lambda_preserving(&w)?);

    let wt = compose(&w, &t);
    println!("w∘tent:\n{}", wt.to_pamap_string());
    println!("type-II breakpoints: w {}, tent {}, w∘tent {}", count_type2(&w), count_type2(&t), count_type2(&wt));

    let t3 = iterate(&t, 3, DEFAULT_SEGMENT_BUDGET)?;
    println!("tent³ has {} laps", turning_points(&t3).len() + 1);

    let fa = PAMap::f_a();
    println!("f_A in F: {}, in G: {}", is_in_f(&fa), is_in_g(&fa));
    println!("f_A(3/4) = {}", fmt_q(&fa.eval(&q(3, 4))?));
    println!("sup distance tent vs w: {}", fmt_q(&sup_distance(&t, &w)));
    Ok(())
}
