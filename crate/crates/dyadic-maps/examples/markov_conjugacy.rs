//! From a Markov skeleton to a λ-preserving map with the same combinatorics.

use dyadic_maps::prelude::*;

const SLOPES: &str = "\
2^-1 2^-1 0 0 0 0
0 0 2^-1 2^-1 2^-1 2^-1
0 0 0 0 0 2^-2
0 0 0 0 0 2^-3
0 2^-1 2^-1 2^-1 2^-1 2^-3
2^-1 0 0 0 0 0
";

fn main() -> Result<()> {
    let s: IndexMap = vec![0, 2, 6, 5, 6, 1, 0];
    let a_star = a_star(&s)?;
    println!("A* ({}x{}), {:?}", a_star.n(), a_star.n(), classify(&a_star));

    let a = parse_matrix(SLOPES)?;
    let st = stationary(&a)?;
    println!("stationary: {}", st.vector.iter().map(fmt_q).collect::<Vec<_>>().join(" "));

    let c = construct_conjugate(&s, &a)?;
    println!("partition: {}", c.partition.iter().map(fmt_q).collect::<Vec<_>>().join(" "));
    println!("t in G: {}\n{}", c.in_g, c.t.to_pamap_string());

    let values = c.partition.iter().map(|x| c.t.at(x)).collect();
    let sk = MarkovSkeleton::new(c.partition.clone(), values)?;
    println!("t* = s*: {}", index_map(&sk)? == s);

    let uniform = default_slopes(&a_star, SlopeMode::Uniform)?;
    println!("uniform slopes:\n{}", format_matrix(&uniform));
    Ok(())
}
