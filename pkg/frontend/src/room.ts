// Multi-user room helpers: a join code is simply the session id on the
// server, and the figure demo stays disabled until the room is full.

export interface SessionListing {
  status: string;
  mode: string;
  players: number[];
}

export function sessionUrl(base: string, sessionId: string): string {
  const ws = base.replace(/^http/, "ws").replace(/\/$/, "");
  return `${ws}/session/${sessionId}`;
}

export function freePlayerId(listing: SessionListing, nPlayers: number): number | null {
  for (let i = 0; i < nPlayers; i++) {
    if (!listing.players.includes(i)) return i;
  }
  return null;
}

/** Status line under the figure indicator. */
export function roomMessage(mode: string, playersPresent: number, minPlayers = 2): string {
  if (mode !== "multi-user") return "";
  if (playersPresent >= minPlayers) return "room full: the hidden figure can appear";
  const missing = minPlayers - playersPresent;
  return `waiting for ${missing} more player${missing === 1 ? "" : "s"}: the figure needs at least ${minPlayers} observers`;
}

export async function fetchSessions(
  base: string,
  fetcher: typeof fetch = fetch,
): Promise<Record<string, SessionListing>> {
  const resp = await fetcher(`${base.replace(/\/$/, "")}/sessions`);
  if (!resp.ok) throw new Error(`session listing failed: ${resp.status}`);
  return (await resp.json()) as Record<string, SessionListing>;
}
