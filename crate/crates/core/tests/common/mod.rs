#![allow(dead_code)]

use std::collections::BTreeMap;

use eulerspec_core::period::sample_period_function;
use eulerspec_core::topology::{build_index_set, find_fixed_points, FixedPointScan};
use eulerspec_core::{make_builtin_flow, IndexSet, PeriodFunction, Scales, StreamField, Tolerances};

pub fn flow(name: &str) -> StreamField {
    make_builtin_flow(name, &BTreeMap::new()).unwrap()
}

pub fn flow_with(name: &str, params: &[(&str, f64)]) -> StreamField {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    make_builtin_flow(name, &p).unwrap()
}

pub struct Pipeline {
    pub field: StreamField,
    pub scales: Scales,
    pub fps: FixedPointScan,
    pub index: IndexSet,
}

pub fn topology(field: StreamField) -> Pipeline {
    let tol = Tolerances::default();
    let scales = field.scales(&tol);
    let fps = find_fixed_points(&field, 64, &tol).unwrap();
    let index = build_index_set(&field, &fps, 64, &scales).unwrap();
    Pipeline { field, scales, fps, index }
}

pub fn periods(p: &Pipeline) -> Vec<PeriodFunction> {
    p.index
        .families
        .iter()
        .map(|f| sample_period_function(&p.field, f, 24, &p.scales).unwrap())
        .collect()
}
