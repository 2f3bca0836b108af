pub mod channel;
pub mod design;
pub mod error;
pub mod geometry;
pub mod interference;
pub mod montecarlo;
pub mod network;
pub mod performance;
pub mod numerics;
pub mod settings;
