//! Built-in scenario presets. Node placements are configuration, not code:
//! the presets are complete config files that can be written out, edited,
//! and rerun.

/// One base station at the center of a 100 x 100 m playground and nine
/// fixed sensors answering a 1 s beacon in 60 ms TDMA slots, one hour.
pub fn static_preset() -> String {
    format!("{STATIC_PRESET_HEAD}{COMMON}{STATIC_PRESET_NODES}")
}

/// A fixed base station and one sensor circling an 80 x 40 m rectangle at
/// 10 m/s through 19 positions, transmitting at every position.
pub fn mobile_preset() -> String {
    format!("{MOBILE_PRESET_HEAD}{COMMON}{MOBILE_PRESET_NODES}")
}

pub fn preset_by_name(name: &str) -> Option<String> {
    match name {
        "static" => Some(static_preset()),
        "mobile" => Some(mobile_preset()),
        _ => None,
    }
}

const COMMON: &str = "\
[radio]
tx_power_dbm = 1.0
datarate_baud = 2400
modulation = fsk2
noise_floor_dbm = -100.0
rssi_resolution_db = 1.0

[frame]
preamble_bytes = 4
sync_bytes = 4
header_bytes = 3
payload_bytes = 2
crc_bytes = 2

[channel]
attenuation_exponent = 2.0
antenna_area_m2 = 0.000987670
sensitivity_cutoff_dbm = -110.0
propagation_delay = zero

[firmware]
beacon_prep_us = 0
data_prep_us = 0
inter_round_state = idle

# Representative CC2500-class transceiver and MSP430-class MCU draws at 3 V.
# Not measured hardware truth; adjust to your parts before trusting joules.
[power]
radio_sleep_mw = 0.0012
radio_idle_mw = 5.1
radio_rx_mw = 46.8
radio_tx_mw = 64.5
cpu_idle_mw = 0.0165
cpu_active_mw = 3.6
";

const STATIC_PRESET_HEAD: &str = "\
# Static RSSI-readout scenario: a central base station beacons every second;
# nine fixed sensors reply in their TDMA slots; the base logs the RSSI of
# every correctly received packet.

[playground]
width_m = 100.0
height_m = 100.0

[sim]
until_s = 3600.0
seed = 1

[tdma]
beacons_enabled = true
beacon_period_ms = 1000
slot_time_ms = 60
slot_guard_ms = 1
wake_guard_ms = 1

";

const STATIC_PRESET_NODES: &str = "
[node.1]
role = base
x_m = 50.0
y_m = 50.0

[node.2]
role = sensor
slot = 1
x_m = 25.0
y_m = 25.0

[node.3]
role = sensor
slot = 2
x_m = 50.0
y_m = 25.0

[node.4]
role = sensor
slot = 3
x_m = 75.0
y_m = 25.0

[node.5]
role = sensor
slot = 4
x_m = 25.0
y_m = 50.0

[node.6]
role = sensor
slot = 5
x_m = 75.0
y_m = 50.0

[node.7]
role = sensor
slot = 6
x_m = 25.0
y_m = 75.0

[node.8]
role = sensor
slot = 7
x_m = 50.0
y_m = 75.0

[node.9]
role = sensor
slot = 8
x_m = 75.0
y_m = 75.0

[node.10]
role = sensor
slot = 9
x_m = 10.0
y_m = 10.0
";

const MOBILE_PRESET_HEAD: &str = "\
# Mobile scenario: one sensor moves anti-clockwise through 19 positions on
# a rectangle at 10 m/s and transmits a packet at every position; the fixed
# base station listens continuously and logs RSSI per position.

[playground]
width_m = 100.0
height_m = 100.0

[sim]
until_s = 25.0
seed = 1

[tdma]
beacons_enabled = false
beacon_period_ms = 1000
slot_time_ms = 60
slot_guard_ms = 1
wake_guard_ms = 1

";

const MOBILE_PRESET_NODES: &str = "
[node.1]
role = base
x_m = 50.0
y_m = 50.0

[node.2]
role = sensor
x_m = 10.0
y_m = 30.0

[mobility.2]
model = rectangle
origin_x_m = 10.0
origin_y_m = 30.0
width_m = 80.0
height_m = 40.0
waypoints = 19
speed_mps = 10.0
mode = discrete
";
