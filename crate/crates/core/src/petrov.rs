//! Petrov degeneracy of the null direction `k` from Weyl scalars in a
//! `k`-adapted frame.

use std::fmt;

use crate::curvature::WeylScalars;

/// Default relative tolerance for zero tests.
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PetrovLabel {
    GeneralOrUnaligned,
    IIOrD,
    III,
    N,
    Zero,
}

impl PetrovLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PetrovLabel::GeneralOrUnaligned => "GENERAL_OR_UNALIGNED",
            PetrovLabel::IIOrD => "II_OR_D",
            PetrovLabel::III => "III",
            PetrovLabel::N => "N",
            PetrovLabel::Zero => "ZERO",
        }
    }

    pub fn parse(s: &str) -> Option<PetrovLabel> {
        Some(match s {
            "GENERAL_OR_UNALIGNED" => PetrovLabel::GeneralOrUnaligned,
            "II_OR_D" => PetrovLabel::IIOrD,
            "III" => PetrovLabel::III,
            "N" => PetrovLabel::N,
            "ZERO" => PetrovLabel::Zero,
            _ => return None,
        })
    }
}

impl fmt::Display for PetrovLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PetrovClass {
    pub label: PetrovLabel,
    pub tol: f64,
    /// The absolute threshold actually applied.
    pub threshold: f64,
    pub magnitudes: [f64; 5],
}

/// First matching rule wins: Ψ0 or Ψ1 nonzero means `k` is not a repeated
/// principal null direction; otherwise the first nonvanishing Ψ decides.
/// II and D are not separated.
pub fn classify(psi: &WeylScalars, tol_rel: f64) -> PetrovClass {
    let magnitudes = psi.map(|p| p.norm());
    let scale = magnitudes.iter().copied().fold(1.0, f64::max);
    let threshold = tol_rel * scale;
    let nz = |n: usize| magnitudes[n] > threshold;
    let label = if nz(0) || nz(1) {
        PetrovLabel::GeneralOrUnaligned
    } else if nz(2) {
        PetrovLabel::IIOrD
    } else if nz(3) {
        PetrovLabel::III
    } else if nz(4) {
        PetrovLabel::N
    } else {
        PetrovLabel::Zero
    };
    PetrovClass {
        label,
        tol: tol_rel,
        threshold,
        magnitudes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::C64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn bullet_order() {
        let z = c(0.0, 0.0);
        assert_eq!(classify(&[z; 5], DEFAULT_TOL).label, PetrovLabel::Zero);
        assert_eq!(
            classify(&[z, z, c(0.0, 2.0), c(1.0, 0.0), z], DEFAULT_TOL).label,
            PetrovLabel::IIOrD
        );
        assert_eq!(
            classify(&[z, z, z, c(1e-3, 0.0), c(5.0, 0.0)], DEFAULT_TOL).label,
            PetrovLabel::III
        );
        assert_eq!(
            classify(&[z, z, z, z, c(0.0, -3.0)], DEFAULT_TOL).label,
            PetrovLabel::N
        );
        assert_eq!(
            classify(&[z, c(1.0, 0.0), z, z, z], DEFAULT_TOL).label,
            PetrovLabel::GeneralOrUnaligned
        );
        // tiny residual noise relative to a large Ψ is treated as zero
        assert_eq!(
            classify(&[c(1e-9, 0.0), z, c(100.0, 0.0), z, z], DEFAULT_TOL).label,
            PetrovLabel::IIOrD
        );
        for l in [
            PetrovLabel::GeneralOrUnaligned,
            PetrovLabel::IIOrD,
            PetrovLabel::III,
            PetrovLabel::N,
            PetrovLabel::Zero,
        ] {
            assert_eq!(PetrovLabel::parse(l.as_str()), Some(l));
        }
    }

    fn arb_psi() -> impl Strategy<Value = [C64; 5]> {
        let one = prop_oneof![
            Just(c(0.0, 0.0)),
            (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| c(a, b)),
        ];
        [one.clone(), one.clone(), one.clone(), one.clone(), one]
    }

    proptest! {
        #[test]
        fn invariant_under_common_scaling(psi in arb_psi(), re in 1.0f64..50.0, im in -50.0f64..50.0) {
            let s = c(re, im);
            let scaled = psi.map(|p| p * s);
            // both scales stay above 1 so the threshold scales with them
            prop_assume!(psi.iter().any(|p| p.norm() > 1.0));
            prop_assert_eq!(classify(&psi, 1e-7).label, classify(&scaled, 1e-7).label);
        }

        #[test]
        fn zeroing_first_nonzero_moves_down(psi in arb_psi()) {
            let before = classify(&psi, 1e-7);
            if before.label != PetrovLabel::Zero {
                let mut z = psi;
                let first = (0..5).find(|&n| before.magnitudes[n] > before.threshold).unwrap();
                z[first] = c(0.0, 0.0);
                if first == 0 {
                    z[1] = c(0.0, 0.0);
                }
                let after = classify(&z, 1e-7);
                prop_assert!(after.label > before.label);
            }
        }
    }
}
