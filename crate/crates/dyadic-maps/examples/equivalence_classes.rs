//! Characteristic sequences and equivalence classes `g ~ f₁∘g∘f₂`.

use dyadic_maps::prelude::*;

fn w2(delta: Q) -> Result<PAMap> {
    make_window(&WindowSpec::new(Interval::new(delta, qi(1)), vec![1, 1], true))
}

fn main() -> Result<()> {
    let t = PAMap::tent();
    let a = w2(q(1, 2))?;
    let b = w2(q(1, 4))?;
    println!("C(w2,[1/2,1]) = {}", characteristic_sequence(&a)?);
    println!("C([w2,[1/2,1]]) = {}", class_characteristic_sequence(&a)?);
    println!("w2,[1/2,1] ~ w2,[1/4,1]: {}", same_equivalence_class(&a, &b)?);
    println!("tent∘w2,[1/2,1] ~ tent∘w2,[1/4,1]: {}", same_equivalence_class(&compose(&t, &a), &compose(&t, &b))?);

    // Moving along a class: f₁∘g∘f₂ stays in G when f₂ is chosen by normalize_right.
    let f1 = PAMap::f_a();
    let f2 = normalize_right(&f1, &t)?;
    let moved = compose(&f1, &compose(&t, &f2));
    println!("f_A∘tent∘f₂ in G: {}, same class as tent: {}", is_in_g(&moved), same_equivalence_class(&t, &moved)?);

    let levels = [qi(0), q(1, 4), q(1, 2), qi(1)];
    println!("evolution of w̄3 over {{0,1/4,1/2,1}}: {}", evolution_sequence(&basic_w3(), &levels)?);
    Ok(())
}
