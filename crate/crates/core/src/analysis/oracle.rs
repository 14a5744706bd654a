//! Exhaustive search over the joint grid, the non-factorized comparator.

use crate::env::SimSpec;
use crate::error::{Error, Result};
use crate::policy::argmax;
use crate::space::{ActionTriple, AxisSizes};

/// Largest joint grid the oracle will enumerate.
pub const MAX_ORACLE_ARMS: usize = 1000;

/// Best triple of one flat-indexed table; lowest flat index on ties.
pub fn joint_oracle_table(sizes: AxisSizes, table: &[f64]) -> Result<ActionTriple> {
    let n = sizes.cardinality();
    if n > MAX_ORACLE_ARMS {
        return Err(Error::validation(format!(
            "joint oracle limited to {MAX_ORACLE_ARMS} arms, grid has {n}"
        )));
    }
    if table.len() != n {
        return Err(Error::validation(format!("table has {} entries, grid has {n}", table.len())));
    }
    let mut best: Option<(ActionTriple, f64)> = None;
    for triple in sizes.triples() {
        let v = table[sizes.flat_index(&triple)?];
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((triple, v));
        }
    }
    Ok(best.map(|(t, _)| t).expect("grid is non-empty"))
}

/// Best joint triple for each question id.
pub fn joint_oracle(spec: &SimSpec, question_ids: &[&str]) -> Result<Vec<ActionTriple>> {
    question_ids
        .iter()
        .map(|id| joint_oracle_table(spec.sizes(), spec.table(spec.bucket_of(id))))
        .collect()
}

/// Maximize each axis separately, holding the others at index 0.
///
/// Agrees with the joint oracle when the table is additive across axes.
pub fn per_axis_argmax(sizes: AxisSizes, table: &[f64]) -> Result<ActionTriple> {
    let mut picks = [0usize; 3];
    for slot in 0..3 {
        let line: Vec<f64> = (0..sizes.0[slot])
            .map(|i| {
                let mut idx = [0usize; 3];
                idx[slot] = i;
                sizes.flat_index(&ActionTriple::from_array(idx)).map(|j| table[j])
            })
            .collect::<Result<_>>()?;
        picks[slot] = argmax(&line);
    }
    Ok(ActionTriple::from_array(picks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn planted_optimum() {
        let sizes = AxisSizes([2, 2, 2]);
        let mut table = vec![0.2; 8];
        table[sizes.flat_index(&ActionTriple::new(1, 0, 1)).unwrap()] = 0.9;
        assert_eq!(joint_oracle_table(sizes, &table).unwrap(), ActionTriple::new(1, 0, 1));
    }

    #[test]
    fn ties_go_to_lowest_flat_index() {
        let sizes = AxisSizes([2, 2, 2]);
        assert_eq!(joint_oracle_table(sizes, &[0.5; 8]).unwrap(), ActionTriple::new(0, 0, 0));
    }

    #[test]
    fn full_grid_rejected() {
        let sizes = AxisSizes([100, 11, 8]);
        assert!(joint_oracle_table(sizes, &vec![0.0; 8800]).is_err());
    }

    #[test]
    fn per_question_lookup() {
        let sizes = AxisSizes([2, 1, 2]);
        let spec = SimSpec::from_tables(sizes, vec![vec![0.0, 0.1, 0.9, 0.2], vec![0.7, 0.1, 0.2, 0.3]], 0.0).unwrap();
        let ids = ["a", "b", "c", "d"];
        let got = joint_oracle(&spec, &ids).unwrap();
        for (id, t) in ids.iter().zip(got) {
            assert_eq!(t, spec.optimum(spec.bucket_of(id)));
        }
    }

    proptest! {
        #[test]
        fn additive_tables_factorize(
            up in proptest::collection::vec(0.0f64..1.0, 1..5),
            ut in proptest::collection::vec(0.0f64..1.0, 1..5),
            us in proptest::collection::vec(0.0f64..1.0, 1..5),
        ) {
            let sizes = AxisSizes([up.len(), ut.len(), us.len()]);
            let table: Vec<f64> = sizes
                .triples()
                .map(|t| (up[t.instruction_index] + ut[t.temperature_index] + us[t.steps_index]) / 3.0)
                .collect();
            let joint = joint_oracle_table(sizes, &table).unwrap();
            let split = per_axis_argmax(sizes, &table).unwrap();
            let unique = |u: &[f64]| u.iter().filter(|&&v| v == u[argmax(u)]).count() == 1;
            if unique(&up) && unique(&ut) && unique(&us) {
                prop_assert_eq!(joint, split);
            }
            let gap = table[sizes.flat_index(&joint).unwrap()] - table[sizes.flat_index(&split).unwrap()];
            prop_assert!(gap.abs() < 1e-12);
        }
    }
}
