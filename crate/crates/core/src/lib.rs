//! Delay-optimal packet scheduling over a fading channel under an average
//! power budget.

pub mod cli;
pub mod lp;
pub mod markov;
pub mod model;
pub mod oracle;
pub mod sim;
