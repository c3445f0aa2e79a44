//! The published badge schema and a validator for the keywords it uses.
//!
//! Supported: `type`, `enum`, `const`, `required`, `properties`,
//! `additionalProperties` (boolean), `minimum`, `maximum`, `minLength`,
//! `format: date-time`, `allOf`, `if`/`then`/`else` and `not`. Annotation
//! keywords are ignored. Anything else is reported as unsupported.

use serde_json::Value;

pub const BADGE_SCHEMA: &str = include_str!("../schema/badge.schema.json");

const ANNOTATIONS: [&str; 3] = ["$schema", "title", "description"];

pub fn badge_schema() -> Value {
    serde_json::from_str(BADGE_SCHEMA).expect("published schema is valid JSON")
}

/// Violations of `schema` by `value`, as `path: message` strings.
pub fn validate(schema: &Value, value: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    check(schema, value, "$", &mut errors);
    errors
}

fn type_matches(ty: &str, v: &Value) -> Option<bool> {
    Some(match ty {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.as_f64().is_some_and(|x| x.fract() == 0.0),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        _ => return None,
    })
}

fn check(schema: &Value, v: &Value, path: &str, errors: &mut Vec<String>) {
    let Some(rules) = schema.as_object() else {
        if schema == &Value::Bool(false) {
            errors.push(format!("{path}: no value allowed"));
        }
        return;
    };
    let mut err = |m: String| errors.push(format!("{path}: {m}"));
    for (key, rule) in rules {
        match key.as_str() {
            "type" => match rule.as_str().and_then(|t| type_matches(t, v)) {
                Some(true) => {}
                Some(false) => err(format!("expected {rule}")),
                None => err(format!("unsupported type {rule}")),
            },
            "enum" => {
                if !rule.as_array().is_some_and(|opts| opts.contains(v)) {
                    err(format!("{v} not in {rule}"));
                }
            }
            "const" => {
                if rule != v {
                    err(format!("expected {rule}, got {v}"));
                }
            }
            "minimum" | "maximum" => {
                if let (Some(bound), Some(x)) = (rule.as_f64(), v.as_f64()) {
                    let ok = if key == "minimum" { x >= bound } else { x <= bound };
                    if !ok {
                        err(format!("{x} violates {key} {bound}"));
                    }
                }
            }
            "minLength" => {
                if let (Some(n), Some(s)) = (rule.as_u64(), v.as_str()) {
                    if (s.chars().count() as u64) < n {
                        err(format!("shorter than {n}"));
                    }
                }
            }
            "format" => {
                if rule == "date-time" {
                    if let Some(s) = v.as_str() {
                        if chrono::DateTime::parse_from_rfc3339(s).is_err() {
                            err(format!("{s:?} is not a date-time"));
                        }
                    }
                } else {
                    err(format!("unsupported format {rule}"));
                }
            }
            "required" => {
                if let Some(obj) = v.as_object() {
                    for name in rule.as_array().into_iter().flatten().filter_map(Value::as_str) {
                        if !obj.contains_key(name) {
                            err(format!("missing `{name}`"));
                        }
                    }
                }
            }
            "additionalProperties" => {
                if let (Some(false), Some(obj)) = (rule.as_bool(), v.as_object()) {
                    let known = rules.get("properties").and_then(Value::as_object);
                    for name in obj.keys() {
                        if !known.is_some_and(|k| k.contains_key(name)) {
                            err(format!("unexpected `{name}`"));
                        }
                    }
                }
            }
            "not" => {
                if validate(rule, v).is_empty() {
                    err(format!("must not match {rule}"));
                }
            }
            "properties" | "allOf" | "if" | "then" | "else" => {}
            k if ANNOTATIONS.contains(&k) => {}
            other => err(format!("unsupported keyword `{other}`")),
        }
    }
    if let (Some(props), Some(obj)) = (rules.get("properties").and_then(Value::as_object), v.as_object()) {
        for (name, sub) in props {
            if let Some(child) = obj.get(name) {
                check(sub, child, &format!("{path}.{name}"), errors);
            }
        }
    }
    for sub in rules.get("allOf").and_then(Value::as_array).into_iter().flatten() {
        check(sub, v, path, errors);
    }
    if let Some(cond) = rules.get("if") {
        let branch = if validate(cond, v).is_empty() { "then" } else { "else" };
        if let Some(sub) = rules.get(branch) {
            check(sub, v, path, errors);
        }
    }
}
