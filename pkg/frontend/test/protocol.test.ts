import { describe, expect, it } from "vitest";

import { controlMessage, joinMessage, parseServerFrame } from "../src/protocol.js";

describe("parseServerFrame", () => {
  it("parses known frame types", () => {
    const frame = parseServerFrame(
      JSON.stringify({ type: "hello", session: "s", mode: "live", dt: 0.01,
        n_players: 1, control_dims: [1], players: [], status: "waiting", scenario: "p" }),
    );
    expect(frame?.type).toBe("hello");
  });

  it("rejects malformed payloads instead of throwing", () => {
    expect(parseServerFrame("not json")).toBeNull();
    expect(parseServerFrame("42")).toBeNull();
    expect(parseServerFrame(JSON.stringify({ no: "type" }))).toBeNull();
    expect(parseServerFrame(JSON.stringify({ type: "mystery" }))).toBeNull();
  });

  it("rejects tick frames missing their tick index", () => {
    expect(parseServerFrame(JSON.stringify({ type: "tick", phi: [0] }))).toBeNull();
  });

  it("serializes client messages with the expected fields", () => {
    expect(JSON.parse(controlMessage(1, 2.5, [0.1, -0.2]))).toEqual({
      type: "control", player: 1, t: 2.5, u0: [0.1, -0.2],
    });
    expect(JSON.parse(joinMessage(0))).toEqual({ type: "join", player: 0 });
  });
});
