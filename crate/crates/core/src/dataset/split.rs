//! Subject-level evaluation splits.
//!
//! Shuffles use ChaCha8 seeded from a 64-bit seed, one stream per fold, so
//! plans reproduce across platforms.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Manifest;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubjectRole {
    Train,
    Validation,
    Test,
}

/// Disjoint train / validation / test subject sets for one fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub fold_id: String,
    pub train_subjects: BTreeSet<String>,
    pub val_subjects: BTreeSet<String>,
    pub test_subjects: BTreeSet<String>,
}

impl SplitPlan {
    pub fn role_of(&self, subject: &str) -> Option<SubjectRole> {
        if self.train_subjects.contains(subject) {
            Some(SubjectRole::Train)
        } else if self.val_subjects.contains(subject) {
            Some(SubjectRole::Validation)
        } else if self.test_subjects.contains(subject) {
            Some(SubjectRole::Test)
        } else {
            None
        }
    }

    /// Checks disjointness, a non-empty test set, and that every subject
    /// belongs to `manifest`.
    pub fn validate(&self, manifest: &Manifest) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(format!("fold {}: {msg}", self.fold_id)));
        if self.test_subjects.is_empty() {
            return fail("empty test set".into());
        }
        if self.train_subjects.is_empty() {
            return fail("empty training set".into());
        }
        let sets = [&self.train_subjects, &self.val_subjects, &self.test_subjects];
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                if let Some(s) = a.intersection(b).next() {
                    return fail(format!("subject {s} appears in two roles"));
                }
            }
        }
        let known: BTreeSet<String> = manifest.subjects().into_iter().collect();
        if let Some(s) = sets.iter().flat_map(|s| s.iter()).find(|s| !known.contains(*s)) {
            return fail(format!("subject {s} is not in the manifest"));
        }
        Ok(())
    }
}

fn check_fraction(val_fraction: f64) -> Result<()> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction must be in [0, 1), got {val_fraction}"
        )));
    }
    Ok(())
}

/// Shuffles `pool` and carves off `round(len * val_fraction)` validation
/// subjects, always leaving at least one for training.
fn train_val(
    mut pool: Vec<String>,
    val_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (BTreeSet<String>, BTreeSet<String>) {
    pool.shuffle(rng);
    let n_val = ((pool.len() as f64 * val_fraction).round() as usize).min(pool.len().saturating_sub(1));
    let train = pool.split_off(n_val);
    (train.into_iter().collect(), pool.into_iter().collect())
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One fold per subject, in sorted subject order; fold `k` holds out subject
/// `k` and splits the rest into train/validation by subject.
pub fn loso_splits(manifest: &Manifest, val_fraction: f64, seed: u64) -> Result<Vec<SplitPlan>> {
    check_fraction(val_fraction)?;
    let subjects = manifest.subjects();
    if subjects.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "leave-one-subject-out needs at least 2 subjects, got {}",
            subjects.len()
        )));
    }
    let width = subjects.len().to_string().len();
    Ok(subjects
        .iter()
        .enumerate()
        .map(|(k, held_out)| {
            let rest: Vec<String> = subjects.iter().filter(|s| *s != held_out).cloned().collect();
            let (train, val) = train_val(rest, val_fraction, &mut rng_for(seed, k as u64 + 1));
            SplitPlan {
                fold_id: format!("loso-{k:0width$}-{held_out}"),
                train_subjects: train,
                val_subjects: val,
                test_subjects: BTreeSet::from([held_out.clone()]),
            }
        })
        .collect())
}

/// Shuffles subjects; the first `n_train_subjects` become train+validation
/// (split by subject at `val_fraction`), the rest are the test set.
pub fn fixed_subject_split(
    manifest: &Manifest,
    n_train_subjects: usize,
    val_fraction: f64,
    seed: u64,
) -> Result<SplitPlan> {
    check_fraction(val_fraction)?;
    let mut subjects = manifest.subjects();
    if n_train_subjects == 0 || subjects.len() <= n_train_subjects {
        return Err(Error::InvalidArgument(format!(
            "fixed split needs more than {n_train_subjects} subjects (and at least one for training), found {}",
            subjects.len()
        )));
    }
    let mut rng = rng_for(seed, 0);
    subjects.shuffle(&mut rng);
    let test = subjects.split_off(n_train_subjects);
    let (train, val) = train_val(subjects, val_fraction, &mut rng);
    Ok(SplitPlan {
        fold_id: "fixed".into(),
        train_subjects: train,
        val_subjects: val,
        test_subjects: test.into_iter().collect(),
    })
}
