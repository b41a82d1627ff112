//! The mains-to-5 V chain, plus the regulator headroom boundary.

use agrisim::power::{evaluate_chain, regulator_check, PowerChainSpec, RegulatorCode};

fn main() {
    let spec = PowerChainSpec {
        line_v: 115.0,
        turns_ratio: 3.0,
        regulator: RegulatorCode::new(7805).unwrap(),
        regulator_in_v: None,
        output_current_ma: 500.0,
    };
    println!("{}\n", evaluate_chain(spec).unwrap());

    for code in [7805, 7812, 7824] {
        let reg = RegulatorCode::new(code).unwrap();
        for vin in [reg.output_v() + 2.999, reg.output_v() + 3.0] {
            println!("{code} at {vin:.3} V: {:?}", regulator_check(vin, reg));
        }
    }
    println!("7899: {}", RegulatorCode::new(7899).unwrap_err());
}
