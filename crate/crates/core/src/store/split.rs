use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result};

/// Public/private partition of `0..n_total`, both sides sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub public: Vec<usize>,
    pub private: Vec<usize>,
}

impl Split {
    pub fn n_total(&self) -> usize {
        self.public.len() + self.private.len()
    }

    /// Checks that the two sides are disjoint and cover `0..n_total`.
    pub fn validate(&self, n_total: usize) -> Result<()> {
        let mut seen = vec![false; n_total];
        for &i in self.public.iter().chain(&self.private) {
            if i >= n_total {
                return Err(Error::input(format!("split index {i} out of range for {n_total} examples")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::input(format!("split index {i} appears twice")));
            }
        }
        if self.n_total() != n_total {
            return Err(Error::input(format!(
                "split covers {} of {n_total} examples",
                self.n_total()
            )));
        }
        if self.public.is_empty() || self.private.is_empty() {
            return Err(Error::input("both sides of a split must be non-empty"));
        }
        Ok(())
    }
}

/// Draws `round(public_fraction * n_total)` public indices without
/// replacement; the rest are private.
pub fn split_assign(n_total: usize, public_fraction: f64, seed: u64) -> Result<Split> {
    if !(public_fraction > 0.0 && public_fraction < 1.0) {
        return Err(Error::input(format!(
            "public fraction must lie in (0, 1), got {public_fraction}"
        )));
    }
    let n_public = (public_fraction * n_total as f64).round() as usize;
    if n_public == 0 || n_public >= n_total {
        return Err(Error::input(format!(
            "public fraction {public_fraction} of {n_total} examples leaves one side empty"
        )));
    }
    let mut rng = seeded(seed);
    let mut is_public = vec![false; n_total];
    for i in sample(&mut rng, n_total, n_public) {
        is_public[i] = true;
    }
    let (public, private): (Vec<usize>, Vec<usize>) = (0..n_total).partition(|&i| is_public[i]);
    Ok(Split { public, private })
}
