//! Channel simulation with shared randomness: probability algebra, inner and
//! outer bound evaluation, auxiliary search, symbolic Fourier-Motzkin
//! elimination and finite-blocklength binning simulation.

pub mod auxsearch;
pub mod cli;
pub mod entrofme;
pub mod osrb;
pub mod probkit;
pub mod regions;
pub mod seed;
