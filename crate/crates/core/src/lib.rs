//! Numerical core of a secure semantic image link.
//!
//! A convolutional joint source-channel autoencoder maps images to
//! power-normalized real symbols, which cross a legitimate channel to the
//! intended receiver and a wiretap channel to a passive eavesdropper. Both
//! receivers run the same decoder. Training can use a plain reconstruction
//! objective or a privacy-aware one that additionally drives the
//! eavesdropper's reconstruction toward the all-black image.
//!
//! The crate is `no_std` + `alloc`. File formats, dataset ingestion and the
//! command line live in the `semcom` companion crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod channel;
pub mod codec;
pub mod data;
mod error;
mod linalg;
mod math;
pub mod metrics;
pub mod nn;
pub mod objectives;
pub mod optim;
pub mod params;
pub mod pipeline;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Image, Tensor};
