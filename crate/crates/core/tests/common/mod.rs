#![allow(dead_code)]

pub mod airy_oracle;
pub mod shooting;
