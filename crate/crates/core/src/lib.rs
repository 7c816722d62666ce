//! Fill-probability laboratory: synthetic RFQ event data, projected quantum
//! feature maps on simulated circuits, classical–quantum event matching,
//! statistical learners and walk-forward backtesting.

pub mod backtest;
pub mod cqem;
pub mod data;
pub mod learners;
pub mod pqfm;
pub mod preprocess;
pub mod qsim;
pub mod seed;
pub mod synth;

pub use data::{EventDataset, TradeEvent};
