// Copyright 2026 The optokap Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no stabilizing amplitude: {0}")]
    NoRoot(String),

    #[error("{escaped} of {total} trajectories escaped the histogram domain")]
    TooManyEscapes { escaped: usize, total: usize },

    #[error("no discernible spectral peak below {cutoff}")]
    NoSpectralPeak { cutoff: f64 },

    #[error("numerical abort at t = {t}: {reason}")]
    NumericalAbort { t: f64, reason: String },

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
