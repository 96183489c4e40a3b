//! Shared fixtures for unit tests.

use crate::db::{parse_database, UncertainDatabase};
use crate::query::{parse_query, Query};

pub const FIG1: &str = "\
# conference planning database
@relation C 3 2
@relation R 2 1
C PODS 2016 Rome
C PODS 2016 Paris
C KDD 2017 Rome
R PODS A
R KDD A
R KDD B
";

pub fn fig1_db() -> UncertainDatabase {
    parse_database(FIG1).unwrap()
}

pub fn fig1_query() -> Query {
    parse_query("C(x,y;'Rome') & R(x;'A')").unwrap()
}

pub fn q1() -> Query {
    parse_query("R(u,'a';x) & S(y;x,z) & T(x;y) & P(x;z)").unwrap()
}

pub fn fig3_query() -> Query {
    parse_query(
        "R1(x,u1;u2,z) & R2(x,u2;u1,z) & R3(x,y,u3;u4) & R4(x,y,u4;u3) \
         & R5(y,u5;u6) & R6(y,u6;u5)",
    )
    .unwrap()
}
