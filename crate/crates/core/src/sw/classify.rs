//! Combinatorial classification of adiabatic-limit solutions on a degree-`ell`
//! circle bundle over a genus-`g` surface.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierInput {
    pub genus: i64,
    pub ell: i64,
    pub c1_is_torsion: bool,
    /// Torsion class mod `|ell|` when `ell != 0`, else the base degree.
    pub k: i64,
    pub is_pullback: bool,
}

impl ClassifierInput {
    pub fn new(genus: i64, ell: i64, c1_is_torsion: bool, k: i64) -> Self {
        let k = if ell != 0 { k.rem_euclid(ell.abs()) } else { k };
        ClassifierInput { genus, ell, c1_is_torsion, k, is_pullback: true }
    }

    pub fn not_pullback(genus: i64, ell: i64) -> Self {
        ClassifierInput { genus, ell, c1_is_torsion: false, k: 0, is_pullback: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Empty,
    /// `count` tori of reducibles, each of dimension `dim`.
    ReducibleTori { count: i64, dim: i64 },
    /// Adiabatically stable: nothing but the reducible tori.
    ReducibleOnly { count: i64, dim: i64 },
    /// Reducibles plus one irreducible with `|beta|^2 = beta_norm_sq` (`alpha = 0`).
    ReduciblePlusUniqueIrreducible { degree: i64, beta_norm_sq: f64 },
    /// `ell = 0` and the unique irreducible at `|deg| = g - 1`, no reducibles.
    UniqueIrreducible { degree: i64, beta_norm_sq: f64 },
    /// Holomorphic pairs of the listed base degrees.
    IrreducibleFamily { degrees: Vec<i64>, reducible: bool },
}

/// `V_{g,ell} = {g, ..., |ell| - g} mod ell`, empty unless `|ell| >= 2g`.
pub fn stable_range(genus: i64, ell: i64) -> Vec<i64> {
    let l = ell.abs();
    if l == 0 || l < 2 * genus {
        return Vec::new();
    }
    let mut v: Vec<i64> = (genus..=l - genus).map(|k| k.rem_euclid(l)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// `R_{ell,g} = {0} u {g - 1, ..., |ell| - g + 1}`, empty unless `|ell| >= 2g - 1`.
pub fn reverse_range(genus: i64, ell: i64) -> Vec<i64> {
    let l = ell.abs();
    if l == 0 || l < 2 * genus - 1 {
        return Vec::new();
    }
    let mut v = vec![0];
    v.extend(genus - 1..=l - genus + 1);
    v.sort_unstable();
    v.dedup();
    v
}

/// Representatives `n = k mod ell` with `0 < |n| <= g - 1`.
fn irreducible_degrees(genus: i64, ell: i64, k: i64) -> Vec<i64> {
    let l = ell.abs();
    (-(genus - 1)..=genus - 1).filter(|&n| n != 0 && (n - k).rem_euclid(l) == 0).collect()
}

fn irreducible_case(genus: i64, degrees: Vec<i64>, reducible: bool) -> Option<Classification> {
    match degrees.as_slice() {
        [] => None,
        [n] if n.abs() == genus - 1 => {
            let beta_norm_sq = 2.0 * n.abs() as f64;
            Some(if reducible {
                Classification::ReduciblePlusUniqueIrreducible { degree: *n, beta_norm_sq }
            } else {
                Classification::UniqueIrreducible { degree: *n, beta_norm_sq }
            })
        }
        _ => Some(Classification::IrreducibleFamily { degrees, reducible }),
    }
}

pub fn classify_adiabatic(input: &ClassifierInput) -> Result<Classification> {
    let ClassifierInput { genus, ell, c1_is_torsion, k, is_pullback } = *input;
    if genus < 1 {
        return Err(Error::Invalid(format!("classification needs genus >= 1, got {genus}")));
    }
    if !is_pullback {
        return Ok(Classification::Empty);
    }
    if ell == 0 {
        // Product case: k is the base degree, torsion iff it vanishes.
        if c1_is_torsion != (k == 0) {
            return Err(Error::Invalid(format!("ell = 0: torsion flag {c1_is_torsion} inconsistent with degree {k}")));
        }
        if k == 0 {
            return Ok(Classification::ReducibleTori { count: 1, dim: 2 * genus + 1 });
        }
        let degrees = if k.abs() <= genus - 1 { vec![k] } else { Vec::new() };
        return Ok(irreducible_case(genus, degrees, false).unwrap_or(Classification::Empty));
    }
    if !c1_is_torsion {
        return Ok(Classification::Empty);
    }
    let l = ell.abs();
    let k = k.rem_euclid(l);
    if genus == 1 || stable_range(genus, ell).contains(&k) {
        return Ok(Classification::ReducibleOnly { count: l, dim: 2 * genus });
    }
    Ok(irreducible_case(genus, irreducible_degrees(genus, ell, k), true)
        .unwrap_or(Classification::ReducibleTori { count: l, dim: 2 * genus }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(stable_range(2, 5), vec![2, 3]);
        assert_eq!(stable_range(2, 3), Vec::<i64>::new());
        assert_eq!(reverse_range(2, 4), vec![0, 1, 2, 3]);
        assert_eq!(reverse_range(3, 4), Vec::<i64>::new());
    }

    #[test]
    fn genus_zero_rejected() {
        assert!(classify_adiabatic(&ClassifierInput::new(0, 3, true, 1)).is_err());
    }

    #[test]
    fn product_case_torus() {
        let c = classify_adiabatic(&ClassifierInput::new(2, 0, true, 0)).unwrap();
        assert_eq!(c, Classification::ReducibleTori { count: 1, dim: 5 });
        let c = classify_adiabatic(&ClassifierInput::new(2, 0, false, -1)).unwrap();
        assert_eq!(c, Classification::UniqueIrreducible { degree: -1, beta_norm_sq: 2.0 });
        assert_eq!(classify_adiabatic(&ClassifierInput::new(2, 0, false, 3)).unwrap(), Classification::Empty);
    }

    #[test]
    fn family_when_several_degrees() {
        // g = 3, ell = 3, k = 1: representatives 1 and -2.
        let c = classify_adiabatic(&ClassifierInput::new(3, 3, true, 1)).unwrap();
        assert_eq!(c, Classification::IrreducibleFamily { degrees: vec![-2, 1], reducible: true });
    }
}
