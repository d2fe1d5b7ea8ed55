//! Surface braid groups: presentations, an exact word-problem solver for the
//! Klein-bottle pure braid groups, filtrations, and quotient oracles.

pub mod error;
pub mod finite;
pub mod klein;
pub mod nilpotent;
pub mod presentations;
pub mod report;
pub mod series;
pub mod snf;
pub mod words;

pub use error::{Error, Result};
pub use finite::{
    hom_search, reidemeister_schreier, subgroup_image, todd_coxeter, two_quotient_tower, CosetTable, FiniteModel, PcSubgroup,
    SubgroupDescription, TwoQuotient, WordOracle,
};
pub use klein::{
    action_table, center_witness, normal_form, section_images, verify_action, verify_central, verify_section, ActionTable, KleinSolver,
    SemidirectElement,
};
pub use nilpotent::{lcs_weight, nil_reduce, nilpotent_quotient, FreeNilpotent, NilElement, NilQuotientReport, NilpotentQuotient};
pub use presentations::{abelianization, catalog, Family, Presentation, Relation, Verdict};
pub use report::{CheckEntry, CheckReport};
pub use series::{
    acima_check, compare_descriptions, elm_generators, gamma2_p2k_claimed, gamma_p2k_claimed, klein_series_families, lcs_closure,
    lemaprinc_check, residual_separation, serie_generators, wn_tilde, Comparison, FiltrationFamily, FiltrationKind, Oracle,
    SeparationReport, SerieGenerators, SplitContext,
};
pub use snf::{smith_normal_form, AbelianInvariants, IntMatrix, SmithForm};
pub use words::{colchete_rhs, commutator, free_reduce, left_normed, substitute, Letter, Symbol, Word};
