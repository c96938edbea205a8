//! Desk-scale laboratory for codes on the two-user symmetric Gaussian
//! interference channel.
//!
//! Two transmitter-receiver pairs share one medium: receiver 1 observes
//! `y1 = c1 + h*c2 + z1` and receiver 2 the mirror image. This crate
//! trains a learned rate-1/3 code for that channel and measures it
//! against the classic answers under one deterministic Monte-Carlo
//! bench:
//!
//! - [`ndgrad`] — reverse-mode autodiff over dense tensors (1-D CNNs,
//!   dense layers, GRU cells, stable logit cross-entropy) and Adam.
//! - [`channel`] — the interference channel, SNR arithmetic, and named
//!   counter-based random streams, bit-reproducible across platforms.
//! - [`neural`] — the three-branch CNN encoder with power
//!   normalization, the iterative two-block decoder, an interleaved
//!   variant, and CNN/RNN/feedforward comparison autoencoders.
//! - [`classic`] — convolutional codes under Viterbi, exact log-domain
//!   BCJR, rate-1/3 Turbo codes, BPSK / Gray 4-PAM demapping, and the
//!   time-division / treat-interference-as-noise schemes.
//! - [`trainer`] — alternating encoder/decoder training phases with
//!   adaptive per-user loss weights.
//! - [`evalbench`] — BER/BLER estimation with stopping rules and
//!   confidence intervals, SNR sweeps, block-length and perturbation
//!   studies, and the shared CSV schema.
//! - [`plot`] — dependency-free SVG rendering of BER curves.
//! - [`guide`] — the book's chapters as doc-tested modules.

pub mod channel;
pub mod classic;
pub mod evalbench;
pub mod guide;
pub mod interleaver;
pub mod ndgrad;
pub mod neural;
pub mod plot;
pub mod trainer;
