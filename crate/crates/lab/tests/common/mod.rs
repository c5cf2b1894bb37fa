#![allow(dead_code)]

pub const TINY: &str = r#"
version = 1

[base]
algorithm = "ppo"
seeds = [1, 2]
eval_episodes_interim = 2
eval_episodes_final = 3

[base.ppo]
epochs = 2
epoch_length = 200
hidden = [8, 8]
updates_per_epoch = 3

[[experiment]]
env = "pendulum"
filter = "implicit_simplex"
config = "baseline"

[[experiment]]
env = "pendulum"
filter = "implicit_simplex"
config = "rta_punishment"
"#;
