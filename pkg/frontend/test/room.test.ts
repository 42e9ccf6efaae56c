import { describe, expect, it } from "vitest";

import { freePlayerId, roomMessage, sessionUrl } from "../src/room.js";

describe("room helpers", () => {
  it("derives the websocket endpoint from the server base", () => {
    expect(sessionUrl("http://localhost:8123", "room1")).toBe(
      "ws://localhost:8123/session/room1",
    );
    expect(sessionUrl("https://play.example/", "a")).toBe("wss://play.example/session/a");
  });

  it("picks the lowest free player slot", () => {
    expect(freePlayerId({ status: "waiting", mode: "multi-user", players: [0] }, 2)).toBe(1);
    expect(freePlayerId({ status: "waiting", mode: "multi-user", players: [0, 1] }, 2)).toBeNull();
  });

  it("explains why the figure is disabled in a solo room", () => {
    const waiting = roomMessage("multi-user", 1);
    expect(waiting).toContain("waiting for 1 more player");
    expect(waiting).toContain("at least 2 observers");
    expect(roomMessage("multi-user", 2)).toContain("room full");
    expect(roomMessage("live", 1)).toBe("");
  });
});
