//! Text formats for policies, attribute data, logs and summaries.

mod data;
mod logfile;
mod policy;

pub use data::{parse_data, print_data, DataText};
pub use logfile::{parse_log, parse_summary, print_log, print_summary};
pub use policy::{parse_policy, parse_rule, print_policy, quote, rule_to_string, PolicyText};
