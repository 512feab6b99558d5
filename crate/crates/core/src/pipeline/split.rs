use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub stratified: bool,
}

/// Splits each response class separately, sending `round(n_c * fraction)`
/// (half up) of class `c` to validation. At least one responder always
/// lands in validation. Output ids keep input order.
pub fn stratified_split(patients: &[(String, u8)], validation_fraction: f64, seed: u64) -> Result<CohortSplit> {
    let has = |l| patients.iter().any(|p| p.1 == l);
    if !has(0) || !has(1) {
        return Err(Error::SingleClassCohort);
    }
    let mut in_validation = vec![false; patients.len()];
    for (stream, class) in [(0u64, 1u8), (1, 0)] {
        let mut members: Vec<usize> = (0..patients.len()).filter(|&i| patients[i].1 == class).collect();
        let mut take = (members.len() as f64 * validation_fraction + 0.5).floor() as usize;
        if class == 1 {
            take = take.max(1);
        }
        members.shuffle(&mut rng::stream(seed, stream));
        for &i in &members[..take.min(members.len())] {
            in_validation[i] = true;
        }
    }
    let pick = |v: bool| (0..patients.len()).filter(|&i| in_validation[i] == v).map(|i| patients[i].0.clone()).collect();
    Ok(CohortSplit { train: pick(false), validation: pick(true), stratified: true })
}
