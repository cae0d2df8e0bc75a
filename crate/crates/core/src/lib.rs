#![doc = include_str!("../../../book/src/introduction.md")]

pub mod backbones;
pub mod exec;
pub mod harness;
pub mod instances;
pub mod llm;
pub mod rng;
pub mod search;
pub mod transfer;

/// The user guide, one module per chapter. Its examples run as doctests.
pub mod guide {
    #[doc = include_str!("../../../book/src/instances.md")]
    pub mod instances {}
    #[doc = include_str!("../../../book/src/backbones.md")]
    pub mod backbones {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/prompts.md")]
    pub mod prompts {}
    #[doc = include_str!("../../../book/src/search.md")]
    pub mod search {}
    #[doc = include_str!("../../../book/src/transfer.md")]
    pub mod transfer {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
