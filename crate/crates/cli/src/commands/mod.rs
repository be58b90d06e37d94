pub mod benchmark;
pub mod fit;
pub mod gibbs;
pub mod sample;
pub mod simulate;
