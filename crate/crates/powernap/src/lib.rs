//! Minimum-energy preemptive deadline scheduling with a sleep state.
//!
//! Jobs with release times, deadlines and processing volumes run on `m`
//! identical machines over integer time slots. Energy is the total active
//! machine time plus a wake-up cost `q` per transition out of sleep. This
//! crate provides skeleton-based approximation algorithms for one and many
//! machines, an exact-rational LP rounding pipeline, feasibility engines,
//! and brute-force oracles used to validate everything end to end.

pub mod approx;
pub mod feasibility;
pub mod lp;
pub mod model;
pub mod multi;
pub mod oracle;
pub mod report;
pub mod simplex;
pub mod skeleton;

/// Every Rust code block in the guide compiles and runs as a doc-test, so
/// the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(model, "../../../book/src/model.md");
    chapter!(skeletons, "../../../book/src/skeletons.md");
    chapter!(feasibility, "../../../book/src/feasibility.md");
    chapter!(single_machine, "../../../book/src/single-machine.md");
    chapter!(multi_machine, "../../../book/src/multi-machine.md");
    chapter!(lp_rounding, "../../../book/src/lp-rounding.md");
    chapter!(cli, "../../../book/src/cli.md");
}
