pub mod cli;
pub mod channel;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod modem;
pub mod relaying;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/modem.md")]
    pub mod modem {}
    #[doc = include_str!("../../../book/src/channel.md")]
    pub mod channel {}
    #[doc = include_str!("../../../book/src/relaying.md")]
    pub mod relaying {}
    #[doc = include_str!("../../../book/src/overlay.md")]
    pub mod overlay {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub mod metrics {}
    #[doc = include_str!("../../../book/src/harness.md")]
    pub mod harness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
