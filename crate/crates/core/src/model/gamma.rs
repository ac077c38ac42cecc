use crate::error::{Error, Result};

/// Binary inclusion vector over the `p` candidate variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GammaVector {
    bits: Vec<bool>,
    d_gamma: usize,
}

impl GammaVector {
    /// The empty model on `p` variables.
    pub fn empty(p: usize) -> Self {
        Self {
            bits: vec![false; p],
            d_gamma: 0,
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        let d_gamma = bits.iter().filter(|&&b| b).count();
        Self { bits, d_gamma }
    }

    pub fn from_active(p: usize, active: &[usize]) -> Result<Self> {
        let mut g = Self::empty(p);
        for &j in active {
            if j >= p {
                return Err(Error::InvalidParameter(format!(
                    "variable index {j} out of range for p = {p}"
                )));
            }
            if !g.bits[j] {
                g.flip(j);
            }
        }
        Ok(g)
    }

    /// Model number `code` in the binary enumeration of all `2^p` models;
    /// bit `j` of `code` is `γ_j`.
    pub fn from_code(p: usize, code: u64) -> Self {
        Self::from_bits((0..p).map(|j| (code >> j) & 1 == 1).collect())
    }

    pub fn code(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0, |acc, (j, _)| acc | (1 << j))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn d_gamma(&self) -> usize {
        self.d_gamma
    }

    pub fn is_active(&self, j: usize) -> bool {
        self.bits[j]
    }

    pub fn flip(&mut self, j: usize) {
        self.bits[j] = !self.bits[j];
        if self.bits[j] {
            self.d_gamma += 1;
        } else {
            self.d_gamma -= 1;
        }
    }

    /// Indices of active variables in increasing order.
    pub fn active(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.d_gamma);
        self.active_into(&mut out);
        out
    }

    pub(crate) fn active_into(&self, out: &mut Vec<usize>) {
        out.clear();
        out.extend(
            self.bits
                .iter()
                .enumerate()
                .filter_map(|(j, &b)| b.then_some(j)),
        );
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_model_is_representable() {
        let g = GammaVector::empty(5);
        assert_eq!(g.d_gamma(), 0);
        assert!(g.active().is_empty());
    }

    #[test]
    fn out_of_range_active_rejected() {
        assert!(GammaVector::from_active(3, &[3]).is_err());
    }

    proptest! {
        #[test]
        fn d_gamma_tracks_bits(bits in proptest::collection::vec(any::<bool>(), 0..40),
                               flips in proptest::collection::vec(0usize..40, 0..20)) {
            let mut g = GammaVector::from_bits(bits);
            for f in flips {
                if g.len() > 0 {
                    g.flip(f % g.len());
                }
                prop_assert_eq!(g.d_gamma(), g.bits().iter().filter(|&&b| b).count());
                prop_assert_eq!(g.active().len(), g.d_gamma());
            }
            if g.len() <= 63 {
                prop_assert_eq!(GammaVector::from_code(g.len(), g.code()), g);
            }
        }
    }
}
