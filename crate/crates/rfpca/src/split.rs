//! Seeded, group-stratified train/test splits and k-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn by_group(labels: &[usize]) -> Vec<Vec<usize>> {
    let m = labels.iter().max().map_or(0, |&a| a + 1);
    let mut groups = vec![Vec::new(); m];
    for (i, &a) in labels.iter().enumerate() {
        groups[a].push(i);
    }
    groups
}

/// Put `round(train_frac · N_a)` members of each group in the training part,
/// keeping at least one member on each side whenever `N_a ≥ 2`.
pub fn stratified_split(labels: &[usize], train_frac: f64, seed: u64) -> Result<Split> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(AppError::validation(format!("split ratio {train_frac} must lie in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for mut members in by_group(labels) {
        members.shuffle(&mut rng);
        let n = members.len();
        let mut n_train = (train_frac * n as f64).round() as usize;
        if n >= 2 {
            n_train = n_train.clamp(1, n - 1);
        } else {
            n_train = n;
        }
        split.train.extend_from_slice(&members[..n_train]);
        split.test.extend_from_slice(&members[n_train..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Held-out index sets of a stratified `folds`-fold partition.
///
/// Every group must have at least `folds` members so each held-out fold
/// sees every group.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(AppError::validation("at least 2 folds are required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    let mut offset = 0;
    for (a, mut members) in by_group(labels).into_iter().enumerate() {
        if members.len() < folds {
            return Err(AppError::validation(format!(
                "group {a} has {} samples, fewer than {folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (j, i) in members.into_iter().enumerate() {
            out[(j + offset) % folds].push(i);
        }
        offset += 1;
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

/// Indices of `0..n` not in the sorted slice `held_out`.
pub fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - held_out.len());
    let mut it = held_out.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}
