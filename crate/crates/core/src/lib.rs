//! Identification of linear time-invariant impulse responses by regularization
//! in reproducing kernel Hilbert spaces built for dynamical systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`signals`]: piecewise-constant inputs, datasets, the synthetic test system.
//! * [`kernels`]: causal kernel families (exponential, TC, warped stable-spline
//!   mixtures, translation-invariant) and their textual form.
//! * [`gram`]: representers and kernel matrices of convolution functionals.
//! * [`solver`]: regularized least squares and GCV selection of the
//!   regularization parameter.
//! * [`mkl`]: simplex-constrained multiple kernel learning.
//! * [`diagnostics`]: numerical probes of stability, relative degree, smoothness.
//! * [`experiment`]: the bimodal-system benchmark and its reports.
//!
//! ```
//! use kernel_sysid::prelude::*;
//!
//! let u = PiecewiseConstantSignal::new(vec![0.0, 0.4], vec![1.0, 0.0]).unwrap();
//! let spec = KernelSpec::tc(5.0).unwrap();
//! let times = [0.1, 0.3, 0.5, 0.7];
//! let y: Vec<f64> = times
//!     .iter()
//!     .map(|&t| convolve_true_response(&u, 10.0, 100.0, 20.0, t))
//!     .collect();
//! let q = QuadratureConfig::default();
//! let gram = assemble_gram(&spec, &u, &times, &q).unwrap();
//! let c = fit_rls(gram.matrix(), &y, 1e-6).unwrap();
//! assert_eq!(c.len(), 4);
//! ```

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod gram;
pub mod io;
pub mod kernels;
pub mod mkl;
pub mod moments;
pub mod quadrature;
pub mod signals;
pub mod solver;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::diagnostics::{
        counterexample_lemma2_integral, l1_norm_estimate, lemma2_integral, relative_degree_probe,
        smoothness_probe, stability_trend, stability_trend_with, DegreeProbe, Probe,
        SmoothnessProbe, StabilityReport, TrendThresholds, Verdict,
    };
    pub use crate::error::{Error, Result};
    pub use crate::gram::{
        assemble_gram, cross_gram, gram_discrete, gram_entry, representer_value, GramMatrix,
    };
    pub use crate::kernels::{
        apply_delay, cubic_spline_g, kernel_eval, psd_quadratic_form, Atom, BaseShape,
        IntegratedExponential, Kernel, KernelFamily, KernelSpec, RationalDecay, TiShape,
    };
    pub use crate::mkl::{
        active_atoms, fit_mkl, fit_mkl_from, simplex_project, KernelDictionary, MklModel,
        MklOptions,
    };
    pub use crate::quadrature::QuadratureConfig;
    pub use crate::signals::{
        add_noise, convolve_true_response, generate_binary_input, Dataset, DiscreteSignal,
        PiecewiseConstantSignal, TimeDomain, TrueSystem,
    };
    pub use crate::solver::{
        fit_rls, gcv_score, log_grid, select_lambda, GcvResult, IdentifiedModel,
    };
}

// Book chapters are compiled as doctests so their snippets stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/gram.md")]
    mod gram {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/mkl.md")]
    mod mkl {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/experiment.md")]
    mod experiment {}
}
