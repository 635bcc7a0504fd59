pub mod consistency;
pub mod corpus;
pub mod exec;
pub mod gateway;
pub mod quota;
pub mod report;
pub mod similarity;
pub mod validation;
