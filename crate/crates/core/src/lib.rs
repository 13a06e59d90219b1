pub mod algebra;
pub mod forms;
pub mod jet;
pub mod lagrangian;
pub mod linalg;
pub mod noether;
pub mod numeric;
pub mod problem;
