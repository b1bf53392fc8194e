pub mod interleave;
pub mod ldpc;
pub mod mapping;

pub use interleave::Interleaver;
pub use ldpc::{BpOutput, LdpcCode, ParityMatrix};
pub use mapping::{demap_llr, map_pmf};
