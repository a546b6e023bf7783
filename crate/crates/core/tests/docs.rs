use minfilt::io::{config_to_string, parse_config};
use minfilt::{Backend, Mode};

#[test]
fn readme_config_example_parses() {
    let readme = include_str!("../../../README.md");
    let start = readme.find("```json\n").expect("README has a JSON example") + "```json\n".len();
    let end = start + readme[start..].find("```").unwrap();
    let cfg = parse_config(&readme[start..end]).unwrap();
    assert_eq!(cfg.mode, Mode::Winograd);
    assert!(matches!(cfg.backend, Backend::Fixed(f) if f.frac_bits() == 8));
    assert_eq!(cfg.threads, 1);
    assert_eq!(parse_config(&config_to_string(&cfg)).unwrap(), cfg);
}
