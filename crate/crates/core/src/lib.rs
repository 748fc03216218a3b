pub mod constructions;
pub mod decodability;
pub mod design;
pub mod diversity;
pub mod f4;
pub mod pauli;
pub mod simulator;
pub mod table;
