// Countdown math. The dashboard never runs a timer of its own: the deadline
// is an absolute server timestamp and skew is estimated from server_time on
// every received message, so the displayed remainder only ever re-renders.

export function estimateSkew(serverTime: number, localReceiveTime: number): number {
  return serverTime - localReceiveTime;
}

export function remainingMs(deadline: number | null, skewMs: number, localNow: number): number {
  if (deadline === null) return 0;
  return Math.max(0, deadline - (localNow + skewMs));
}

export function minutesLeft(ms: number): number {
  return Math.ceil(ms / 60_000);
}

export function formatCountdown(ms: number): string {
  const totalSeconds = Math.max(0, Math.round(ms / 1000));
  const minutes = Math.floor(totalSeconds / 60);
  const seconds = totalSeconds % 60;
  return `${String(minutes).padStart(2, "0")}:${String(seconds).padStart(2, "0")}`;
}
