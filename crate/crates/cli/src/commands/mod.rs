//! One module per subcommand: clap flags, the resolved configuration and the runner.

pub mod endogeneity;
pub mod estimate;
pub mod exponents;
pub mod sde;
pub mod simulate;
pub mod tail;
