mod common;

fn check(seed: u64) {
    let failures: Vec<String> = common::run_all(seed)
        .into_iter()
        .filter_map(|(name, r)| r.err().map(|e| format!("{name}: {e}")))
        .collect();
    assert!(failures.is_empty(), "seed {seed}:\n{}", failures.join("\n"));
}

#[test]
fn seed_0() {
    check(0);
}

#[test]
fn seed_1() {
    check(0x5eed_0001);
}

#[test]
fn seed_2() {
    check(0xdead_beef);
}
