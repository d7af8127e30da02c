//! Seeded generator for the synthetic naming-convention corpus: identifier
//! names built from type-indicative stems (`cnt`/`idx`/`num` lean number,
//! `name`/`msg`/`str` lean string, `is`/`has` prefixes lean boolean), with
//! camelCase/snake_case variation and occasional numeric suffixes.

use super::train::LabelledCorpus;
use super::NaturalError;
use crate::logic::TypeUniverse;
use rand::seq::SliceRandom;
use rand::Rng;

pub(crate) const NUMBER_STEMS: &[&str] = &[
    "count", "cnt", "idx", "index", "num", "total", "sum", "len", "size", "pos", "offset", "start",
    "end", "step", "age", "max", "min", "limit", "width", "height", "delta", "add", "depth",
    "rate",
];

pub(crate) const STRING_STEMS: &[&str] = &[
    "name", "msg", "message", "str", "text", "label", "title", "word", "key", "tag", "desc",
    "path", "url", "prefix", "suffix", "greeting", "caption", "phrase", "line", "token",
];

pub(crate) const BOOLEAN_STEMS: &[&str] = &[
    "done", "valid", "ready", "open", "empty", "active", "enabled", "ok", "visible", "dirty",
    "closed", "set", "found", "more", "sorted",
];

pub(crate) const BOOLEAN_PREFIXES: &[&str] = &["is", "has", "can", "should", "was", "will"];

const MODIFIERS: &[&str] = &[
    "cur", "new", "old", "raw", "tmp", "next", "prev", "base", "out",
];

fn capitalise(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn join<R: Rng>(rng: &mut R, left: &str, right: &str) -> String {
    if rng.gen_bool(0.5) {
        format!("{left}{}", capitalise(right))
    } else {
        format!("{left}_{right}")
    }
}

fn decorated<R: Rng>(rng: &mut R, stem: &str) -> String {
    match rng.gen_range(0..5) {
        0 => {
            let modifier = *MODIFIERS.choose(rng).unwrap();
            join(rng, modifier, stem)
        }
        1 => format!("{stem}{}", rng.gen_range(2..10)),
        2 => {
            let modifier = *MODIFIERS.choose(rng).unwrap();
            join(rng, stem, modifier)
        }
        _ => stem.to_string(),
    }
}

pub(crate) fn number_name<R: Rng>(rng: &mut R) -> String {
    let stem = NUMBER_STEMS.choose(rng).unwrap();
    if rng.gen_bool(0.25) {
        let other = NUMBER_STEMS.choose(rng).unwrap();
        join(rng, stem, other)
    } else {
        decorated(rng, stem)
    }
}

pub(crate) fn string_name<R: Rng>(rng: &mut R) -> String {
    let stem = STRING_STEMS.choose(rng).unwrap();
    if rng.gen_bool(0.25) {
        let other = STRING_STEMS.choose(rng).unwrap();
        join(rng, stem, other)
    } else {
        decorated(rng, stem)
    }
}

pub(crate) fn boolean_name<R: Rng>(rng: &mut R) -> String {
    let prefix = BOOLEAN_PREFIXES.choose(rng).unwrap();
    let stem = match rng.gen_range(0..5) {
        0 => STRING_STEMS.choose(rng).unwrap(),
        1 => NUMBER_STEMS.choose(rng).unwrap(),
        _ => BOOLEAN_STEMS.choose(rng).unwrap(),
    };
    join(rng, prefix, stem)
}

pub(crate) fn name_for_type<R: Rng>(rng: &mut R, type_name: &str) -> String {
    match type_name {
        "number" => number_name(rng),
        "string" => string_name(rng),
        "boolean" => boolean_name(rng),
        other => panic!("no naming convention for type `{other}`"),
    }
}

/// Generates `samples` labelled names over the concrete types of the
/// universe (`any` is never a label). Deterministic for a fixed seed.
pub fn synthetic_naming_corpus(
    samples: usize,
    seed: u64,
    universe: &TypeUniverse,
) -> Result<LabelledCorpus, NaturalError> {
    let mut rng = crate::logic::gen::seeded_rng(seed);
    let labelled: Vec<(&'static str, usize)> = ["number", "string", "boolean"]
        .iter()
        .filter_map(|name| universe.index_of(name).map(|i| (*name, i)))
        .collect();
    if labelled.is_empty() {
        return Err(NaturalError::InvalidConfig(
            "universe has none of number/string/boolean".to_string(),
        ));
    }
    let mut pairs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let (type_name, label) = labelled[rng.gen_range(0..labelled.len())];
        pairs.push((name_for_type(&mut rng, type_name), label));
    }
    LabelledCorpus::new(universe.clone(), pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn universe() -> TypeUniverse {
        TypeUniverse::new(["number", "string", "boolean", "any"]).unwrap()
    }

    #[test]
    fn corpus_is_deterministic_per_seed() {
        let universe = universe();
        let a = synthetic_naming_corpus(100, 3, &universe).unwrap();
        let b = synthetic_naming_corpus(100, 3, &universe).unwrap();
        assert_eq!(a, b);
        let c = synthetic_naming_corpus(100, 4, &universe).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn labels_cover_all_concrete_types() {
        let universe = universe();
        let corpus = synthetic_naming_corpus(300, 1, &universe).unwrap();
        let mut seen = [false; 3];
        for (_, label) in corpus.pairs() {
            seen[*label] = true;
        }
        assert!(seen.iter().all(|&s| s));
        assert!(corpus.pairs().iter().all(|(_, l)| *l != 3));
    }

    #[test]
    fn names_are_ascii_identifiers() {
        let universe = universe();
        let corpus = synthetic_naming_corpus(500, 2, &universe).unwrap();
        for (name, _) in corpus.pairs() {
            assert!(!name.is_empty());
            assert!(name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
        }
    }
}
