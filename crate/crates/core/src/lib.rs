//! Recovery of block-cipher keys from noisy cold-boot memory images.
//!
//! The pipeline is:
//!
//! 1. [`channel`]: model the asymmetric bit-flip channel and score candidates
//!    by log-likelihood, quantized to integer weights.
//! 2. [`enumeration`]: split the noisy key into chunks, score every chunk value
//!    and merge groups of chunks into the `mu` best block candidates with an
//!    optimal key enumerator.
//! 3. [`rankindex`]: count full key candidates in a weight interval and map an
//!    index `r` to the `r`-th such candidate.
//! 4. [`search`]: test candidates against a known plaintext/ciphertext pair,
//!    either classically or through the simulated Grover search of [`grover`].
//!
//! [`lowmc`] provides the test cipher and Picnic-style key generation, [`costs`]
//! the quantum gate-count model and [`harness`] the success-rate experiments.

pub mod bits;
pub mod channel;
pub mod costs;
pub mod enumeration;
pub mod error;
pub mod grover;
pub mod harness;
pub mod lowmc;
pub mod rankindex;
pub mod search;

mod seed;

pub use bits::BitString;
pub use channel::ChannelParams;
pub use error::{Error, Result};
