use super::{shape_of, Pattern, RewriteRule};

/// Matrix multiplication onto an `rows x cols` weight-stationary array.
pub fn rule_systolic_array(rows: usize, cols: usize) -> RewriteRule {
    rule_systolic_array_batched(rows, cols, None)
}

/// As [`rule_systolic_array`], additionally refusing activations with more
/// than `max_batch` rows.
pub fn rule_systolic_array_batched(rows: usize, cols: usize, max_batch: Option<usize>) -> RewriteRule {
    assert!(rows >= 1 && cols >= 1, "array dimensions must be positive");
    let rhs = Pattern::parse(&format!(
        "(systolicArray {rows} {cols} ?a0 (access (transpose ?a1 (list 1 0)) 0))"
    ))
    .unwrap();
    RewriteRule::new("systolic-array", "(compute dotProd (cartProd ?a0 ?a1))", move |_, _, s| {
        vec![rhs.instantiate(s)]
    })
    .with_condition(move |g, _, s| {
        let a0 = shape_of(g, s, "a0");
        let a1 = shape_of(g, s, "a1");
        match (a0.access.as_slice(), a0.compute.as_slice(), a1.access.as_slice(), a1.compute.as_slice()) {
            (&[batch], &[r0], &[c], &[r1]) => {
                r0 == rows && r1 == rows && c == cols && max_batch.is_none_or(|m| batch <= m)
            }
            _ => false,
        }
    })
}
