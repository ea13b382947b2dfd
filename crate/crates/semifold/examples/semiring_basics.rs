//! Tour of the value model and the six bundled semirings: exact rationals,
//! the identity pair, inversion, and normalization.

use semifold::algebra::{annihilator_identity, invert, normalize, registry_lookup, SemiringSpec};
use semifold::value::Value;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Values parse from text and stay exact: rationals never round.
    let a = Value::parse("2/3")?;
    let b = Value::parse("5/6")?;
    println!("{a} + {b} = {}", a.add(&b)?);
    println!("{a} * {b} = {}", a.mul(&b)?);

    // Every semiring is an ordinary value you can pass around.
    println!("\n{:<12} {:>6} {:>6} {:>5} {:>5} invertible", "name", "marg", "expand", "1+", "1*");
    for s in SemiringSpec::all() {
        let (one_times, one_plus) = annihilator_identity(&s);
        println!(
            "{:<12} {:>6} {:>6} {:>5} {:>5} {}",
            s.name,
            s.marg.name(),
            s.expand.name(),
            one_plus.to_string(),
            one_times.to_string(),
            s.invertible
        );
    }

    // The same fold means different things under different algebras.
    let costs = [Value::int(4), Value::int(1), Value::int(3)];
    let min_sum = registry_lookup("min-sum")?;
    let sum_product = registry_lookup("sum-product")?;
    println!("\nplus-fold of 4, 1, 3:");
    println!("  min-sum     -> {}", min_sum.plus_fold(costs.iter())?);
    println!("  sum-product -> {}", sum_product.plus_fold(costs.iter())?);

    // Invertible expansions support division, which powers normalization.
    let third = invert(&sum_product, &Value::int(3))?;
    println!("\ninverse of 3 under product: {third}");
    let beliefs = [Value::int(1), Value::int(4)];
    let normalized = normalize(&sum_product, &beliefs)?;
    println!(
        "normalize [1, 4] -> [{}, {}]",
        normalized.values[0], normalized.values[1]
    );

    // Costs normalize by grounding the best entry at zero instead.
    let grounded = normalize(&min_sum, &costs)?;
    println!(
        "ground [4, 1, 3] -> [{}, {}, {}]",
        grounded.values[0], grounded.values[1], grounded.values[2]
    );
    Ok(())
}
