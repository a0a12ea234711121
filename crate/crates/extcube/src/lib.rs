//! Exact computation of Ext over the exterior subalgebras E_n = E(Q_0,…,Q_n)
//! of the mod-p Steenrod algebra acting on H^*(BP⟨n⟩).
//!
//! The engine builds the weight-graded Koszul complex H^*(BP⟨n⟩)[v_0,…,v_n]
//! with differential d(x*) = Σ Q_i(x*)·v_i, computes its homology exactly
//! over F_p, runs the cube-of-spectral-sequences representative algorithm,
//! and mechanically verifies the vanishing and degree-bound statements that
//! the homology satisfies on finite windows. An independent minimal-resolution
//! computation of the same Ext groups cross-validates every chart.

pub mod chart;
pub mod fp;
pub mod koszul;
pub mod milnor;
pub mod multicomplex;
pub mod resolution;
pub mod synth;

pub use chart::{ChartKey, ExtChart};
pub use fp::{FpMatrix, FpVector, LinalgError, Prime, RowSpace};
pub use koszul::{KoszulElement, KoszulError, WeightComplex, WeightHomology};
pub use milnor::{CohomElement, Context, MilnorError, Monomial};
pub use multicomplex::{
    ComplexError, DivisionStrategy, HomologyResult, Multicomplex, MulticomplexBuilder,
    SolveStrategy, SparseElem, SpectralSequencePage,
};
pub use resolution::{EnModule, Resolution, ResolutionError};

#[cfg(test)]
mod tests {
    // completed computations are immutable and shareable across threads
    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn results_are_shareable() {
        assert_send_sync::<crate::Prime>();
        assert_send_sync::<crate::FpMatrix>();
        assert_send_sync::<crate::Monomial>();
        assert_send_sync::<crate::CohomElement>();
        assert_send_sync::<crate::Multicomplex>();
        assert_send_sync::<crate::HomologyResult>();
        assert_send_sync::<crate::SpectralSequencePage>();
        assert_send_sync::<crate::WeightComplex>();
        assert_send_sync::<crate::WeightHomology>();
        assert_send_sync::<crate::ExtChart>();
        assert_send_sync::<crate::EnModule>();
        assert_send_sync::<crate::Resolution>();
    }
}
