//! Seeded generator for the synthetic program corpus: small gold-annotated
//! `.tl` files mixing usage patterns so that the two evidence channels have
//! complementary blind spots. Neutral names over numeric operators leave the
//! naming model guessing while usage pins the types; convention-named unused
//! parameters leave usage silent while names carry the signal; `+` and
//! comparisons tie slots together without fixing the shared type.

use crate::logic::TypeUniverse;
use crate::natural::synthetic_naming_corpus;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

const NEUTRAL_VALUES: &[&str] = &[
    "val", "item", "thing", "obj", "entry", "node", "elem", "arg", "cell", "res", "acc", "datum",
    "piece", "unit", "probe",
];

const NEUTRAL_FUNCTIONS: &[&str] = &[
    "calc", "process", "compute", "run", "apply", "evaluate", "combine", "merge", "reduce",
    "scale", "handle", "mix", "fold", "work",
];

/// One generated gold program.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFile {
    pub name: String,
    pub source: String,
    pub slot_count: usize,
}

struct NamePool<'r> {
    rng: &'r mut ChaCha8Rng,
    used: HashSet<String>,
}

impl NamePool<'_> {
    fn unique(&mut self, mut sample: impl FnMut(&mut ChaCha8Rng) -> String) -> String {
        for _ in 0..50 {
            let name = sample(self.rng);
            if self.used.insert(name.clone()) {
                return name;
            }
        }
        // Pools are large relative to per-file usage; suffix as a last
        // resort.
        loop {
            let name = format!("{}{}", sample(self.rng), self.rng.gen_range(10..100));
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }

    fn conventional(&mut self, type_name: &'static str) -> String {
        self.unique(|rng| crate::natural::name_for_type(rng, type_name))
    }

    fn neutral_value(&mut self) -> String {
        self.unique(|rng| NEUTRAL_VALUES.choose(rng).unwrap().to_string())
    }

    fn neutral_function(&mut self) -> String {
        self.unique(|rng| NEUTRAL_FUNCTIONS.choose(rng).unwrap().to_string())
    }
}

/// source text, slots emitted
type Template = (String, usize);

fn arith_neutral(pool: &mut NamePool) -> Template {
    let f = pool.neutral_function();
    let a = pool.neutral_value();
    let b = pool.neutral_value();
    let op = *["*", "-", "/"].choose(pool.rng).unwrap();
    if pool.rng.gen_bool(0.5) {
        let local = pool.neutral_value();
        (
            format!(
                "function {f}({a}: number, {b}: number): number {{\n    let {local}: number = {a} {op} {b};\n    return {local};\n}}\n"
            ),
            4,
        )
    } else {
        (
            format!(
                "function {f}({a}: number, {b}: number): number {{\n    return {a} {op} {b};\n}}\n"
            ),
            3,
        )
    }
}

fn const_return(pool: &mut NamePool) -> Template {
    let ret_ty = *["number", "string", "boolean"].choose(pool.rng).unwrap();
    let f = pool.conventional(ret_ty);
    let p1_ty = *["number", "string", "boolean"].choose(pool.rng).unwrap();
    let p2_ty = *["number", "string", "boolean"].choose(pool.rng).unwrap();
    let p1 = pool.conventional(p1_ty);
    let p2 = pool.conventional(p2_ty);
    let literal = match ret_ty {
        "number" => pool.rng.gen_range(1..100).to_string(),
        "string" => format!(
            "\"{}\"",
            ["hello", "done", "item", "value"].choose(pool.rng).unwrap()
        ),
        _ => ["true", "false"].choose(pool.rng).unwrap().to_string(),
    };
    (
        format!(
            "function {f}({p1}: {p1_ty}, {p2}: {p2_ty}): {ret_ty} {{\n    return {literal};\n}}\n"
        ),
        3,
    )
}

fn plus_tie(pool: &mut NamePool) -> Template {
    let ty = *["number", "string"].choose(pool.rng).unwrap();
    let f = pool.conventional(ty);
    let a = pool.conventional(ty);
    let b = pool.conventional(ty);
    (
        format!("function {f}({a}: {ty}, {b}: {ty}): {ty} {{\n    return {a} + {b};\n}}\n"),
        3,
    )
}

fn compare(pool: &mut NamePool) -> Template {
    let f = pool.conventional("boolean");
    let a = pool.conventional("number");
    let b = pool.conventional("number");
    let op = *["<", "<=", ">", ">="].choose(pool.rng).unwrap();
    (
        format!(
            "function {f}({a}: number, {b}: number): boolean {{\n    return {a} {op} {b};\n}}\n"
        ),
        3,
    )
}

fn concat_literal(pool: &mut NamePool) -> Template {
    let f = pool.conventional("string");
    let p = pool.conventional("string");
    let lit = ["\"hi \"", "\": \"", "\"!\""].choose(pool.rng).unwrap();
    let body = if pool.rng.gen_bool(0.5) {
        format!("return {lit} ++ {p};")
    } else {
        format!("return {p} ++ {lit};")
    };
    (
        format!("function {f}({p}: string): string {{\n    {body}\n}}\n"),
        2,
    )
}

fn call_chain(pool: &mut NamePool) -> Template {
    let inner = pool.conventional("number");
    let inner_param = pool.conventional("number");
    let outer = pool.conventional("number");
    let outer_param = pool.conventional("number");
    let k = pool.rng.gen_range(2..10);
    (
        format!(
            "function {inner}({inner_param}: number): number {{\n    return {inner_param} * {k};\n}}\n\nfunction {outer}({outer_param}: number): number {{\n    return {inner}({outer_param});\n}}\n"
        ),
        4,
    )
}

fn bool_local(pool: &mut NamePool) -> Template {
    let f = pool.conventional("boolean");
    let p = pool.conventional("boolean");
    let local = pool.conventional("boolean");
    let lit = ["true", "false"].choose(pool.rng).unwrap();
    let op = ["==", "!="].choose(pool.rng).unwrap();
    (
        format!(
            "function {f}({p}: boolean): boolean {{\n    let {local}: boolean = {lit};\n    return {p} {op} {local};\n}}\n"
        ),
        3,
    )
}

/// Generates `count` gold programs, two function groups per file.
/// Deterministic per seed; every file passes the reference checker.
pub fn generate_program_corpus(count: usize, seed: u64) -> Vec<CorpusFile> {
    let mut rng = crate::logic::gen::seeded_rng(seed);
    let mut files = Vec::with_capacity(count);
    for i in 0..count {
        let mut pool = NamePool {
            rng: &mut rng,
            used: HashSet::new(),
        };
        let mut source = String::new();
        let mut slot_count = 0;
        for _ in 0..2 {
            // Weighted template mix; weights sum to 100.
            let roll = pool.rng.gen_range(0..100);
            let (text, slots) = match roll {
                0..=19 => arith_neutral(&mut pool),
                20..=39 => const_return(&mut pool),
                40..=54 => plus_tie(&mut pool),
                55..=69 => compare(&mut pool),
                70..=79 => concat_literal(&mut pool),
                80..=89 => call_chain(&mut pool),
                _ => bool_local(&mut pool),
            };
            if !source.is_empty() {
                source.push('\n');
            }
            source.push_str(&text);
            slot_count += slots;
        }
        files.push(CorpusFile {
            name: format!("prog_{i:03}.tl"),
            source,
            slot_count,
        });
    }
    files
}

/// Writes the full synthetic fixture set: `names.tsv` (the naming-convention
/// corpus) and `programs/*.tl` (the gold program corpus).
pub fn write_corpus_dir(
    dir: &std::path::Path,
    programs: usize,
    names: usize,
    seed: u64,
    universe: &TypeUniverse,
) -> Result<usize, super::PipelineError> {
    let naming =
        synthetic_naming_corpus(names, seed, universe).map_err(super::PipelineError::Natural)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("names.tsv"), naming.to_tsv())?;
    let programs_dir = dir.join("programs");
    std::fs::create_dir_all(&programs_dir)?;
    let files = generate_program_corpus(programs, seed);
    let mut slots = 0;
    for file in &files {
        std::fs::write(programs_dir.join(&file.name), &file.source)?;
        slots += file.slot_count;
    }
    Ok(slots)
}
