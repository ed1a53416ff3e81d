//! Spin-configuration basis for the M-atom chain and its ladder operators.
//!
//! Basis state `s` encodes atom `m` as bit `m`: set means excited. Operators
//! are assembled in sparse form over the `2^M` states.

use crate::sparse::{CooBuilder, Csr};
use crate::{OracleError, C64, MAX_ATOMS};

/// The exact solver's Hilbert space: `2^M` spin configurations, `M` capped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    num_atoms: u32,
}

impl HilbertSpace {
    pub fn new(num_atoms: u32) -> Result<Self, OracleError> {
        if num_atoms > MAX_ATOMS {
            return Err(OracleError::Capacity { requested: num_atoms, cap: MAX_ATOMS });
        }
        Ok(Self { num_atoms })
    }

    pub fn num_atoms(&self) -> u32 {
        self.num_atoms
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_atoms
    }

    /// Lowering operator of atom `m`.
    pub fn sigma_minus(&self, m: u32) -> Csr {
        assert!(m < self.num_atoms);
        let dim = self.dim();
        let bit = 1usize << m;
        let mut b = CooBuilder::new(dim);
        for s in 0..dim {
            if s & bit != 0 {
                b.push(s & !bit, s, C64::new(1.0, 0.0));
            }
        }
        b.build()
    }

    /// `sigma^+_m sigma^-_n` (excitation hop n -> m for distinct atoms,
    /// projector onto the excited state for m = n).
    pub fn sigma_plus_minus(&self, m: u32, n: u32) -> Csr {
        assert!(m < self.num_atoms && n < self.num_atoms);
        let dim = self.dim();
        let (bm, bn) = (1usize << m, 1usize << n);
        let mut b = CooBuilder::new(dim);
        for s in 0..dim {
            if m == n {
                if s & bm != 0 {
                    b.push(s, s, C64::new(1.0, 0.0));
                }
            } else if s & bn != 0 && s & bm == 0 {
                b.push((s & !bn) | bm, s, C64::new(1.0, 0.0));
            }
        }
        b.build()
    }

    /// Collective lowering operator `sum_m w_m sigma^-_m + shift * id`.
    pub fn collective_lowering(&self, weights: &[C64], shift: C64) -> Csr {
        assert_eq!(weights.len(), self.num_atoms as usize);
        let dim = self.dim();
        let mut b = CooBuilder::new(dim);
        for s in 0..dim {
            if shift != C64::new(0.0, 0.0) {
                b.push(s, s, shift);
            }
            for (m, &w) in weights.iter().enumerate() {
                let bit = 1usize << m;
                if s & bit != 0 {
                    b.push(s & !bit, s, w);
                }
            }
        }
        b.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_enforced() {
        assert!(HilbertSpace::new(11).is_ok());
        assert!(matches!(
            HilbertSpace::new(12),
            Err(OracleError::Capacity { requested: 12, cap: 11 })
        ));
    }

    #[test]
    fn sigma_minus_acts_on_bit() {
        let h = HilbertSpace::new(2).unwrap();
        let sm = h.sigma_minus(1);
        let d = sm.to_dense();
        // lowers |10> (state 2) to |00> (state 0) and |11> (3) to |01> (1)
        assert_eq!(d[0 * 4 + 2], C64::new(1.0, 0.0));
        assert_eq!(d[1 * 4 + 3], C64::new(1.0, 0.0));
        assert_eq!(sm.nnz(), 2);
    }

    #[test]
    fn hop_operator() {
        let h = HilbertSpace::new(2).unwrap();
        let hop = h.sigma_plus_minus(1, 0); // move excitation from atom 0 to 1
        let d = hop.to_dense();
        assert_eq!(d[2 * 4 + 1], C64::new(1.0, 0.0));
        assert_eq!(hop.nnz(), 1);
        let proj = h.sigma_plus_minus(0, 0);
        assert_eq!(proj.nnz(), 2); // states 1 and 3 have atom 0 excited
    }
}
