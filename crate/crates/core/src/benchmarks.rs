// SPDX-License-Identifier: Apache-2.0

//! Bundled benchmarks: two small feedback designs and a mini-UART with
//! loopback drivers and bug-injected variants.

pub const EX1_V: &str = include_str!("../benchmarks/ex1.v");
pub const TOP_AB_V: &str = include_str!("../benchmarks/top_ab.v");
pub const UART_V: &str = include_str!("../benchmarks/uart.v");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UartBug {
    None,
    /// The receiver stores bit `k` at index `k + 1`.
    RxIndex,
    /// Transmit-register writes are decoded from address bit 0 only, so a
    /// control write also starts a transmission.
    PortDecode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TxData {
    Nondet,
    /// `tx[i] = 5 * i + 3` truncated to the data width.
    Fixed,
}

#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: String,
    pub verilog: String,
    pub top: String,
    pub firmware: String,
    /// Known verdict at every bound in `bounds` (`true` = safe), when it
    /// does not depend on the bound.
    pub expect_safe: Option<bool>,
    /// Bounds at which the benchmark has at most 16 nondet input bits.
    pub bounds: Vec<usize>,
}

/// Mini-UART source with data width `dw` and an optional injected bug.
pub fn uart_verilog(dw: u32, bug: UartBug) -> String {
    let mut v = UART_V.replace("parameter DW = 4;", &format!("parameter DW = {dw};"));
    match bug {
        UartBug::None => {}
        UartBug::RxIndex => v = v.replace("rx_shift[rx_cnt] <= line;", "rx_shift[rx_cnt + 1] <= line;"),
        UartBug::PortDecode => {
            v = v.replacen("sel && we_i && adr_i == 2'd0", "sel && we_i && !adr_i[0]", 1);
        }
    }
    v
}

/// Loopback driver: reset, enable loopback, then send `frames` words and
/// assert that each is received unchanged. With `property`, the wait for a
/// frame is expressed as a temporal property on the line instead of a
/// counted loop.
pub fn uart_driver(dw: u32, frames: u32, data: TxData, property: bool) -> String {
    let t = format!("u{dw}");
    let bits = dw + 1;
    let fill = match data {
        TxData::Nondet => format!("tx_b[i] = nondet({dw});"),
        TxData::Fixed => "tx_b[i] = i * 5 + 3;".to_string(),
    };
    let wait = if property {
        format!("property(1 |-> tx_o == 0 && ##{bits} tx_o == 1);")
    } else {
        format!("for (u8 j = 0; j < {bits}; j++) step();")
    };
    format!(
        r#"// Loopback driver for the mini-UART.
{t} tx_b[{frames}];
{t} rx_b[{frames}];

void wb_reset() {{
  set_input(rst_i, 1);
  set_input(stb_i, 0);
  set_input(cyc_i, 0);
  step();
  set_input(rst_i, 0);
}}

void wb_idle() {{
  step();
}}

void wb_write(u2 addr, {t} b) {{
  set_input(adr_i, addr);
  set_input(dat_i, b);
  set_input(we_i, 1);
  set_input(cyc_i, 1);
  set_input(stb_i, 1);
  step();
  set_input(we_i, 0);
  set_input(cyc_i, 0);
  set_input(stb_i, 0);
}}

{t} wb_read(u2 addr) {{
  set_input(adr_i, addr);
  set_input(we_i, 0);
  set_input(cyc_i, 1);
  set_input(stb_i, 1);
  step();
  {t} v = read_output(dat_o);
  set_input(cyc_i, 0);
  set_input(stb_i, 0);
  return v;
}}

void main() {{
  set_input(rx_i, 1);
  set_input(adr_i, 0);
  set_input(dat_i, 0);
  set_input(we_i, 0);
  wb_reset();
  wb_idle();
  wb_write(2, 1);
  for (u8 i = 0; i < {frames}; i++) {{
    {fill}
    wb_write(0, tx_b[i]);
    {wait}
    rx_b[i] = wb_read(0);
    assert(rx_b[i] == tx_b[i], "loopback");
  }}
}}
"#
    )
}

pub fn uart(name: &str, dw: u32, bug: UartBug, frames: u32, data: TxData, property: bool) -> Benchmark {
    let max_frames = (16 / dw) as usize;
    Benchmark {
        name: name.to_string(),
        verilog: uart_verilog(dw, bug),
        top: "uart".into(),
        firmware: uart_driver(dw, frames, data, property),
        expect_safe: match bug {
            UartBug::None => Some(true),
            _ => None,
        },
        bounds: (1..=max_frames.min(4)).collect(),
    }
}

fn ex1(name: &str, assertion: &str, safe: Option<bool>) -> Benchmark {
    Benchmark {
        name: name.into(),
        verilog: EX1_V.into(),
        top: "top".into(),
        firmware: format!("void main() {{\n  while (1) {{\n    step();\n    assert({assertion});\n  }}\n}}\n"),
        expect_safe: safe,
        bounds: vec![1, 2, 3, 4],
    }
}

fn top_ab(name: &str, assertion: &str, safe: bool) -> Benchmark {
    Benchmark {
        name: name.into(),
        verilog: TOP_AB_V.into(),
        top: "top".into(),
        firmware: format!("void main() {{\n  while (1) {{\n    step();\n    assert({assertion});\n  }}\n}}\n"),
        expect_safe: Some(safe),
        bounds: vec![1, 2, 3, 4],
    }
}

/// Every bundled benchmark.
pub fn all() -> Vec<Benchmark> {
    vec![
        ex1("ex1_d_zero", "d == 0", Some(true)),
        // Needs two cycles with a = 1, so it is safe at bound 1.
        ex1("ex1_e_zero", "e == 0", None),
        top_ab("top_ab_msg_ne_7", "msg != 7", true),
        top_ab("top_ab_msg_ne_5", "msg != 5", false),
        uart("uart4", 4, UartBug::None, 4, TxData::Nondet, false),
        uart("uart4_prop", 4, UartBug::None, 4, TxData::Nondet, true),
        uart("uart4_bug_rxindex", 4, UartBug::RxIndex, 4, TxData::Nondet, false),
        uart("uart4_bug_decode", 4, UartBug::PortDecode, 4, TxData::Nondet, false),
        uart("uart8", 8, UartBug::None, 2, TxData::Nondet, false),
        uart("uart8_bug_rxindex", 8, UartBug::RxIndex, 2, TxData::Nondet, false),
    ]
}

pub fn by_name(name: &str) -> Option<Benchmark> {
    all().into_iter().find(|b| b.name == name)
}
