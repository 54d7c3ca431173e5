use kremlite::ast::{parse_program, pretty_lowstar, Outcome};
use kremlite::harness::{check_equivalence, diff_traces, gen_program, Features, Modulo, Status};
use kremlite::lower::{back_translate_program, compile_program};
use kremlite::lowsem::run_low;
use kremlite::passes::{pipeline, is_hoisted, is_struct_free};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compiled_programs_match_source(seed in 0u64..1_000_000, size in 5usize..60) {
        let g = gen_program(seed, size, Features::safe());
        for s in &g.inputs {
            let v = check_equivalence(&g.program, &g.entry, s, 100_000).unwrap();
            prop_assert_eq!(v.status, Status::Pass, "{:?}", v.first_divergence);
        }
    }

    #[test]
    fn faulting_programs_fail_alike(seed in 0u64..1_000_000) {
        let g = gen_program(seed, 30, Features::faulting());
        let v = check_equivalence(&g.program, &g.entry, &g.inputs[0], 100_000).unwrap();
        prop_assert!(v.passed());
        let went_wrong = matches!(v.left, Some(Outcome::GoesWrong { .. }));
        prop_assert!(went_wrong);
    }

    #[test]
    fn pretty_printing_reparses(seed in 0u64..1_000_000) {
        let g = gen_program(seed, 30, Features::safe());
        let text = pretty_lowstar(&g.program.program).unwrap();
        prop_assert_eq!(parse_program(&text).unwrap(), g.program.program.clone());
    }

    #[test]
    fn back_translation_inverts_compilation(seed in 0u64..1_000_000) {
        let g = gen_program(seed, 30, Features::buffers_only());
        let out = compile_program(&g.program).unwrap();
        prop_assert_eq!(back_translate_program(&out.program, &out.entry).unwrap(), g.program.program);
    }

    #[test]
    fn pipeline_output_is_hoisted_and_flat(seed in 0u64..1_000_000) {
        let g = gen_program(seed, 30, Features { int_result: true, ..Features::safe() });
        let out = compile_program(&g.program).unwrap();
        let stages = pipeline(&out.program, &out.entry).map_err(|(_, e)| e).unwrap();
        let last = stages.last().unwrap();
        prop_assert!(is_hoisted(&last.program, &last.entry));
        prop_assert!(is_struct_free(&last.program, &last.entry));
    }

    #[test]
    fn a_trace_equals_itself(seed in 0u64..1_000_000) {
        let g = gen_program(seed, 20, Features::safe());
        let o = run_low(&g.program, &g.entry, &g.inputs[0], 100_000);
        prop_assert_eq!(diff_traces(o.trace(), o.trace(), Modulo::Literal).status, Status::Pass);
    }
}
