//! Elements of `F` as words in the generators `f_A`, `f_B`.

use dyadic_maps::prelude::*;

fn main() -> Result<()> {
    let f = PAMap::from_fracs(&[(0, 1, 0, 1), (1, 8, 1, 4), (3, 8, 1, 2), (1, 2, 3, 4), (1, 1, 1, 1)]);
    let word = f_to_generator_word(&f)?;
    let tokens: Vec<&str> = word.iter().map(|l| l.token()).collect();
    println!("f = {}", tokens.join(" "));
    println!("recomposes: {}", compose_letters(&word) == f);

    // x_2 = f_A⁻¹ f_B f_A
    let x2 = compose_letters(&[FLetter::AInv, FLetter::B, FLetter::A]);
    println!("x_2:\n{}", x2.to_pamap_string());
    let inv = f.inverse()?;
    println!("f⁻¹ word length {}", f_to_generator_word(&inv)?.len());
    Ok(())
}
