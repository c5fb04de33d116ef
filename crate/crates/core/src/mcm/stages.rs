use thiserror::Error;

use super::ast::{OpKind, StageSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StageError {
    #[error("no stages given")]
    NoStages,
    #[error("stage {stage} is empty")]
    EmptyStage { stage: usize },
    #[error("{kind} appears in more than one stage")]
    Overlap { kind: OpKind },
    #[error("{kind} is not covered by any stage")]
    Omission { kind: OpKind },
    #[error("stage order places {kind} before an operation that precedes it")]
    Order { kind: OpKind },
}

/// Accepts exactly the partitions of `{Fe, Is, Ex, Re}` whose stages,
/// read in order, cover consecutive runs of the canonical sequence.
pub fn validate_stages(spec: &StageSpec) -> Result<(), StageError> {
    if spec.stages.is_empty() {
        return Err(StageError::NoStages);
    }
    let mut seen = [false; 4];
    for (i, stage) in spec.stages.iter().enumerate() {
        if stage.is_empty() {
            return Err(StageError::EmptyStage { stage: i });
        }
        for &k in stage {
            if std::mem::replace(&mut seen[k as usize], true) {
                return Err(StageError::Overlap { kind: k });
            }
        }
    }
    if let Some(k) = OpKind::ALL.into_iter().find(|k| !seen[*k as usize]) {
        return Err(StageError::Omission { kind: k });
    }
    let mut flat: Vec<OpKind> = Vec::with_capacity(4);
    for stage in &spec.stages {
        let mut s = stage.clone();
        s.sort();
        flat.extend(s);
    }
    for (pos, k) in flat.iter().enumerate() {
        if *k != OpKind::ALL[pos] {
            return Err(StageError::Order { kind: *k });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use OpKind::*;

    fn spec(stages: &[&[OpKind]]) -> StageSpec {
        StageSpec {
            stages: stages.iter().map(|s| s.to_vec()).collect(),
        }
    }

    #[test]
    fn two_stage_split() {
        assert_eq!(validate_stages(&spec(&[&[Fe, Is, Ex], &[Re]])), Ok(()));
    }

    #[test]
    fn identity_partition() {
        assert_eq!(
            validate_stages(&spec(&[&[Fe], &[Is], &[Ex], &[Re]])),
            Ok(())
        );
    }

    #[test]
    fn overlap_names_kind() {
        assert_eq!(
            validate_stages(&spec(&[&[Fe, Is], &[Fe, Ex], &[Re]])),
            Err(StageError::Overlap { kind: Fe })
        );
    }

    #[test]
    fn omission_and_order() {
        assert_eq!(
            validate_stages(&spec(&[&[Fe, Is, Ex]])),
            Err(StageError::Omission { kind: Re })
        );
        assert!(matches!(
            validate_stages(&spec(&[&[Fe, Ex], &[Is], &[Re]])),
            Err(StageError::Order { .. })
        ));
        assert!(matches!(
            validate_stages(&spec(&[&[Re], &[Fe, Is, Ex]])),
            Err(StageError::Order { .. })
        ));
    }

    // Independent characterization: a partition is valid iff assigning each
    // kind its stage index gives a non-decreasing sequence over Fe,Is,Ex,Re.
    fn oracle(stages: &[Vec<OpKind>]) -> bool {
        let mut idx = [usize::MAX; 4];
        for (i, s) in stages.iter().enumerate() {
            if s.is_empty() {
                return false;
            }
            for k in s {
                if idx[*k as usize] != usize::MAX {
                    return false;
                }
                idx[*k as usize] = i;
            }
        }
        idx.iter().all(|i| *i != usize::MAX) && idx.windows(2).all(|w| w[0] <= w[1])
    }

    proptest! {
        #[test]
        fn accepts_exactly_order_preserving(
            raw in prop::collection::vec(prop::collection::vec(0usize..4, 0..4), 1..5)
        ) {
            let stages: Vec<Vec<OpKind>> = raw
                .iter()
                .map(|s| s.iter().map(|i| OpKind::ALL[*i]).collect())
                .collect();
            let got = validate_stages(&StageSpec { stages: stages.clone() }).is_ok();
            prop_assert_eq!(got, oracle(&stages));
        }
    }
}
