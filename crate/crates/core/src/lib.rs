//! Core estimation routines for combining a randomized experiment with a
//! larger observational dataset.
//!
//! The central object is the weighted objective
//! `(1 - lambda) * L_exp(beta(theta)) + lambda * L_obs(theta)`, where
//! `L_exp` anchors the causal coordinate to an experimental estimate and
//! `L_obs` is an observational regression loss. The mixing weight `lambda`
//! is chosen by K-fold cross-validation on the experimental data alone.
//!
//! The crate is `no_std`-compatible (with `alloc`); file formats, the CLI
//! and thread fan-out live in the companion `cvci` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod cv;
pub mod data;
pub mod erm;
pub mod error;
pub mod estimators;
pub mod seed;
pub mod sim;
pub mod stats;

mod fmath;
mod linalg;
