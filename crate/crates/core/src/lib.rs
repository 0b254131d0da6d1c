pub mod aero;
pub mod aircraft;
pub mod control;
pub mod ddpg;
pub mod dynamics;
pub mod env;
pub mod protection;
pub mod harness;
