//! Shared oracle for the BMI fixture, written from the threshold table
//! rather than from the fixture source.

#![allow(dead_code)]

use suitegen::fixtures::bmi_program;
use suitegen::minipy::{CallOutcome, Machine, Program, Value};

/// Upper bounds (inclusive) for Underweight, Normal weight, Overweight per
/// child/teen age bracket; anything above is Obese.
pub const CHILD_TABLE: [(i64, i64, [f64; 3]); 6] = [
    (2, 4, [14.0, 17.5, 18.5]),
    (5, 7, [13.5, 14.0, 20.0]),
    (8, 10, [14.0, 20.0, 22.0]),
    (11, 13, [15.0, 22.0, 26.5]),
    (14, 16, [16.5, 24.5, 29.0]),
    (17, 19, [17.5, 26.5, 31.0]),
];

/// Adult upper bounds (exclusive).
pub const ADULT_TABLE: [(f64, &str); 4] = [
    (18.5, "Underweight"),
    (25.0, "Normal weight"),
    (30.0, "Overweight"),
    (40.0, "Obese"),
];

pub fn bmi(height: i64, weight: i64) -> f64 {
    weight as f64 / (height as f64 / 100.0).powf(2.0)
}

pub fn oracle_adult(age: i64, bmi: f64) -> Option<&'static str> {
    if age <= 19 {
        return None;
    }
    Some(
        ADULT_TABLE
            .iter()
            .find(|(limit, _)| bmi < *limit)
            .map_or("Severely Obese", |(_, name)| name),
    )
}

pub fn oracle_child(age: i64, bmi: f64) -> Option<&'static str> {
    let (_, _, limits) = CHILD_TABLE.iter().find(|(lo, hi, _)| (*lo..=*hi).contains(&age))?;
    let names = ["Underweight", "Normal weight", "Overweight"];
    Some(
        limits
            .iter()
            .zip(names)
            .find(|(limit, _)| bmi <= **limit)
            .map_or("Obese", |(_, name)| name),
    )
}

pub fn call_on(program: &Program, ctor: [i64; 3], method: &str) -> CallOutcome {
    let mut m = Machine::new(program);
    let args = ctor.iter().map(|&v| Value::Int(v)).collect();
    let mut obj = match m.construct(args) {
        Ok(o) => o,
        Err(e) => return CallOutcome::Raised(e),
    };
    match m.call(&mut obj, method, vec![]) {
        Ok(v) => CallOutcome::Returned(v),
        Err(e) => CallOutcome::Raised(e),
    }
}

pub fn call(ctor: [i64; 3], method: &str) -> CallOutcome {
    call_on(&bmi_program(), ctor, method)
}

pub fn text(outcome: &CallOutcome) -> Option<String> {
    match outcome {
        CallOutcome::Returned(Value::Text(s)) => Some(s.clone()),
        _ => None,
    }
}
