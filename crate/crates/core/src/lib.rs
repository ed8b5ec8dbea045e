pub mod bipartite;
pub mod error;
pub mod figures;
pub mod gallery;
pub mod io;
pub mod linalg;
pub mod maps;
pub mod optim;
pub mod optimality;
pub mod search;
pub mod states;
pub mod witness;
