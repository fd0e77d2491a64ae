//! Desk-scale laboratory for Simon-based quantum forgery attacks on the OTR
//! authenticated-encryption mode and its Prost-OTR-Even-Mansour variant.
//!
//! Block widths are 6 to 16 bits so every function the attacks query in
//! superposition fits in an explicit truth table, and Simon's algorithm is
//! simulated exactly from those tables.

pub mod attacks;
pub mod cipher;
pub mod error;
pub mod experiment;
pub mod gf2n;
pub mod otr;
pub mod simon;

pub use error::{Error, Result};
